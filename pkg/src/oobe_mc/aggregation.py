"""Received-power link budgets, per-trial aggregation and run statistics.

Per emitter, in dB::

    P_sat = P_oobe - L_pwrctl + G_tx(theta, phi) + G_sat(offaxis)
            - L_path - L_gas - L_other

Sums over emitters happen in linear watts. An empty sum is 0 W, which is
reported as ``-inf`` dBm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .antenna import panel_angles, sounder_gain, tx_gain
from .deployment import EmitterTable, TrialDeployment
from .emitters import EmitterKind, EmitterNode
from .errors import InvalidArgumentError, PairingError
from .geometry import look_angles_xy
from .propagation import fspl, gaseous_loss
from .scenario import Scenario, flatten
from .units import DecibelPower, dbm_to_watts, watts_to_dbm

METRICS = ("gnb", "rep_down", "ue", "rep_up", "down", "up", "combined")
PERCENTILES = (50.0, 90.0, 99.0, 99.9)


def _l_other(s: Scenario, kind):
    lo = s.l_other_db
    table = np.array([lo.gnb, lo.repeater, lo.ue, lo.repeater])
    return table[np.asarray(kind, dtype=int)]


def link_budget_db(p_tx_dbm, tx_gain_dbi, sat_gain_dbi, l_path_db, l_gas_db=0.0, l_other_db=0.0, l_pwrctl_db=0.0):
    """Received power in dB form; works element-wise on arrays."""
    return p_tx_dbm - l_pwrctl_db + tx_gain_dbi + sat_gain_dbi - l_path_db - l_gas_db - l_other_db


def received_dbm(table: EmitterTable, s: Scenario) -> np.ndarray:
    """Power received at the sounder from every emitter, ignoring activity."""
    n = len(table)
    if n == 0:
        return np.zeros(0)
    g = s.geometry
    elev, az, off, slant = look_angles_xy(table.x, table.y, g)
    tx = np.empty(n)
    for aid, ant in enumerate(table.antennas):
        m = table.antenna_id == aid
        if not m.any():
            continue
        theta, phi = panel_angles(az[m], elev[m], table.panel_azimuth_deg[m],
                                  ant.array.mechanical_downtilt_deg)
        tx[m] = tx_gain(ant, s.oobe_correlation, theta, phi,
                        table.steer_theta_deg[m], table.steer_phi_deg[m])
    rx = sounder_gain(s.sounder_pattern, off)
    l_path = fspl(s.frequency_hz, slant)
    l_gas = gaseous_loss(s.zenith_attenuation_db, elev)
    return link_budget_db(table.oobe_dbm, tx, rx, l_path, l_gas, _l_other(s, table.kind),
                          table.l_pwrctl_db)


def link_budget(e: EmitterNode, s: Scenario) -> DecibelPower:
    """Power from one emitter at the sounder, in the emitter's OOBE bandwidth."""
    table = EmitterTable.from_nodes([e])
    return DecibelPower(float(received_dbm(table, s)[0]), e.oobe_trp.ref_bandwidth_hz)


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    class_w: tuple  # watts per EmitterKind, indexed by kind value
    active_counts: tuple  # active emitters per EmitterKind

    @property
    def down_w(self) -> float:
        return self.class_w[EmitterKind.GNB] + self.class_w[EmitterKind.REPEATER_DOWN]

    @property
    def up_w(self) -> float:
        return self.class_w[EmitterKind.UE] + self.class_w[EmitterKind.REPEATER_UP]

    @property
    def combined_w(self) -> float:
        return self.down_w + self.up_w

    def metric_w(self, metric: str) -> float:
        return {
            "gnb": self.class_w[EmitterKind.GNB],
            "rep_down": self.class_w[EmitterKind.REPEATER_DOWN],
            "ue": self.class_w[EmitterKind.UE],
            "rep_up": self.class_w[EmitterKind.REPEATER_UP],
            "down": self.down_w,
            "up": self.up_w,
            "combined": self.combined_w,
        }[metric]

    def metric_dbm(self, metric: str) -> float:
        return watts_to_dbm(self.metric_w(metric))

    @property
    def downstream_total_dbm(self) -> float:
        return watts_to_dbm(self.down_w)

    @property
    def upstream_total_dbm(self) -> float:
        return watts_to_dbm(self.up_w)

    @property
    def combined_dbm(self) -> float:
        return watts_to_dbm(self.combined_w)


def aggregate_trial(d: TrialDeployment, s: Scenario) -> TrialResult:
    t = d.table
    kinds = t.kind.astype(int)
    if len(t):
        w = np.where(t.active, dbm_to_watts(received_dbm(t, s)), 0.0)
    else:
        w = np.zeros(0)
    class_w = np.bincount(kinds, weights=w, minlength=4)
    active = np.bincount(kinds[t.active], minlength=4) if len(t) else np.zeros(4, dtype=int)
    return TrialResult(d.trial_index, tuple(float(v) for v in class_w),
                       tuple(int(v) for v in active))


# --------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class MetricStats:
    mean_w: float
    median_w: float
    std_w: float
    percentiles_w: dict  # percentile -> watts
    exceedance: float | None

    @property
    def mean_dbm(self) -> float:
        return watts_to_dbm(self.mean_w)

    @property
    def median_dbm(self) -> float:
        return watts_to_dbm(self.median_w)

    def percentile_dbm(self, q: float) -> float:
        return watts_to_dbm(self.percentiles_w[q])

    def to_dict(self) -> dict:
        return {
            "mean_w": self.mean_w,
            "mean_dbm": self.mean_dbm,
            "median_dbm": self.median_dbm,
            "std_w": self.std_w,
            "percentiles_dbm": {_pkey(q): self.percentile_dbm(q) for q in sorted(self.percentiles_w)},
            "exceedance": self.exceedance,
        }


def _pkey(q: float) -> str:
    return f"p{q:g}"


@dataclass
class RunStatistics:
    n_trials: int
    metrics: dict  # metric name -> MetricStats
    cdf_dbm: np.ndarray  # sorted combined power per trial
    cdf_prob: np.ndarray
    threshold_dbm: float | None = None
    scenario: dict | None = field(default=None, repr=False)

    def __getitem__(self, metric: str) -> MetricStats:
        return self.metrics[metric]

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "threshold_dbm": self.threshold_dbm,
            "metrics": {k: v.to_dict() for k, v in self.metrics.items()},
        }

    @classmethod
    def from_dict(cls, d: dict, scenario: dict | None = None) -> "RunStatistics":
        metrics = {}
        for name, m in d["metrics"].items():
            pct = {float(k[1:]): float(dbm_to_watts(_num(v))) for k, v in m["percentiles_dbm"].items()}
            metrics[name] = MetricStats(
                mean_w=float(m["mean_w"]),
                median_w=float(dbm_to_watts(_num(m["median_dbm"]))),
                std_w=float(m["std_w"]),
                percentiles_w=pct,
                exceedance=m.get("exceedance"),
            )
        return cls(int(d["n_trials"]), metrics, np.zeros(0), np.zeros(0),
                   d.get("threshold_dbm"), scenario)


def _num(v):
    if isinstance(v, str):
        return float(v)  # "-inf" / "inf"
    return v


def run_statistics(results: Sequence[TrialResult], threshold_dbm: float | None = None,
                   scenario: dict | None = None) -> RunStatistics:
    """Distributional summary; computed on linear watts, reported in dBm."""
    if not results:
        raise InvalidArgumentError("run_statistics needs at least one trial")
    results = sorted(results, key=lambda r: r.trial_index)
    thr_w = None if threshold_dbm is None else dbm_to_watts(threshold_dbm)
    metrics = {}
    for name in METRICS:
        w = np.array([r.metric_w(name) for r in results])
        mean = w[0] if np.all(w == w[0]) else math.fsum(w) / len(w)
        std = math.sqrt(math.fsum((w - mean) ** 2) / len(w))
        pct = {q: float(v) for q, v in zip(PERCENTILES, np.percentile(w, PERCENTILES))}
        # interpolation can break ordering by an ulp; enforce monotone percentiles
        running = -math.inf
        for q in PERCENTILES:
            running = max(running, pct[q])
            pct[q] = running
        exc = None if thr_w is None else float(np.count_nonzero(w > thr_w)) / len(w)
        metrics[name] = MetricStats(mean, pct[50.0], std, pct, exc)
    combined = np.sort(np.array([r.combined_w for r in results]))
    prob = np.arange(1, len(combined) + 1) / len(combined)
    return RunStatistics(len(results), metrics, watts_to_dbm(combined), prob,
                         threshold_dbm, scenario)


# --------------------------------------------------------------------------
# penalties


def penalty_closed_form(f: int) -> float:
    """Interference increase (dB) from ``f`` repeaters per cell, each matching a gNB."""
    if f < 0:
        raise InvalidArgumentError(f"repeater factor must be >= 0, got {f}")
    return 10.0 * math.log10(1 + f)


def paired_differences(a: dict | None, b: dict | None, knob: str) -> list[str]:
    """Scenario fields, other than ``knob`` and anything under it, that differ."""
    if a is None or b is None:
        return []
    fa, fb = flatten(a), flatten(b)
    keys = sorted(set(fa) | set(fb))
    return [k for k in keys
            if not (k == knob or k.startswith(knob + "."))
            and fa.get(k, _MISSING) != fb.get(k, _MISSING)]


_MISSING = object()


def ratio_db(num_w: float, den_w: float) -> float:
    if num_w == den_w:
        return 0.0
    if den_w == 0:
        return math.inf
    if num_w == 0:
        return -math.inf
    return 10.0 * math.log10(num_w / den_w)


def penalty_empirical(run_with: RunStatistics, run_without: RunStatistics,
                      metric: str = "down", knob: str = "repeater_factor_f") -> float:
    """Mean-of-linear power ratio between two paired runs, in dB."""
    diff = paired_differences(run_with.scenario, run_without.scenario, knob)
    if diff:
        raise PairingError("runs are not paired", diff)
    return ratio_db(run_with[metric].mean_w, run_without[metric].mean_w)


def percentile_penalties(run_with: RunStatistics, run_without: RunStatistics,
                         metric: str) -> dict:
    a, b = run_with[metric], run_without[metric]
    return {_pkey(q): ratio_db(a.percentiles_w[q], b.percentiles_w[q])
            for q in sorted(a.percentiles_w)}


def evaluate_trials(s: Scenario, indices: Iterable[int]) -> list[TrialResult]:
    from .deployment import generate_trial

    return [aggregate_trial(generate_trial(s, i), s) for i in indices]
