"""Run orchestration, paired comparisons, parameter sweeps and file output."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .aggregation import (
    METRICS,
    RunStatistics,
    TrialResult,
    aggregate_trial,
    paired_differences,
    penalty_closed_form,
    percentile_penalties,
    run_statistics,
    ratio_db,
)
from .deployment import RNG_ALGORITHM, generate_trial
from .emitters import EmitterKind
from .errors import ConfigError, PairingError
from .scenario import SCHEMA_VERSION, Scenario, scenario_from_dict, scenario_hash, set_knob

CSV_HEADER = ["trial", "gnb_dbm", "rep_down_dbm", "ue_dbm", "rep_up_dbm", "down_dbm",
              "up_dbm", "combined_dbm", "n_gnb", "n_rep", "n_ue_active"]
THREADS_ENV = "OOBE_MC_THREADS"
_CHUNK = 50


def fmt_dbm(v: float) -> str:
    if v == -math.inf:
        return "-inf"
    if v == math.inf:
        return "inf"
    return f"{v:.4f}"


def jsonable(obj):
    """Replace non-finite floats with string tokens so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            raise ValueError("NaN reached serialisation")
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def thread_count(requested: int | None = None) -> int:
    if requested is None:
        raw = os.environ.get(THREADS_ENV, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", field=THREADS_ENV) from None
    if requested < 0:
        raise ConfigError("must be >= 0", field=THREADS_ENV)
    return requested or (os.cpu_count() or 1)


@dataclass
class PowerControlSummary:
    """Distribution of per-UE power-control reductions across all dropped UEs."""

    count: int = 0
    min_db: float = math.inf
    max_db: float = -math.inf
    histogram: dict = field(default_factory=dict)  # 10 dB bins, key = bin lower edge

    def add(self, values: np.ndarray) -> None:
        if not len(values):
            return
        self.count += len(values)
        self.min_db = min(self.min_db, float(values.min()))
        self.max_db = max(self.max_db, float(values.max()))
        bins = (np.floor(values / 10.0) * 10).astype(int)
        for b, c in zip(*np.unique(bins, return_counts=True)):
            self.histogram[int(b)] = self.histogram.get(int(b), 0) + int(c)

    def merge(self, other: "PowerControlSummary") -> None:
        self.count += other.count
        self.min_db = min(self.min_db, other.min_db)
        self.max_db = max(self.max_db, other.max_db)
        for b, c in other.histogram.items():
            self.histogram[b] = self.histogram.get(b, 0) + c

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "min_db": self.min_db if self.count else None,
            "max_db": self.max_db if self.count else None,
            "histogram_10db": {str(b): self.histogram[b] for b in sorted(self.histogram)},
        }


@dataclass
class RunManifest:
    scenario: Scenario
    statistics: RunStatistics
    results: list
    pwrctl: PowerControlSummary
    started_at: str = ""
    finished_at: str = ""
    artifact_version: str = __version__

    @property
    def scenario_hash(self) -> str:
        return self.scenario.hash()

    def to_dict(self) -> dict:
        return jsonable({
            "artifact_version": self.artifact_version,
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario.to_dict(),
            "scenario_hash": self.scenario_hash,
            "master_seed": self.scenario.master_seed,
            "rng_algorithm": RNG_ALGORITHM,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "statistics": self.statistics.to_dict(),
            "ue_power_control_reduction_db": self.pwrctl.to_dict(),
        })


def _evaluate_chunk(s: Scenario, indices):
    out = []
    pc = PowerControlSummary()
    for i in indices:
        d = generate_trial(s, i)
        t = d.table
        pc.add(t.l_pwrctl_db[t.kind == EmitterKind.UE])
        out.append(aggregate_trial(d, s))
    return out, pc


def run(s: Scenario, out_dir=None, *, threads: int | None = None, write_cdf: bool = False) -> RunManifest:
    """Execute every trial of ``s``; optionally write CSV and manifest to ``out_dir``."""
    started = _now()
    n_threads = thread_count(threads)
    chunks = [range(a, min(a + _CHUNK, s.trials)) for a in range(0, s.trials, _CHUNK)]
    if n_threads == 1 or len(chunks) == 1:
        parts = [_evaluate_chunk(s, c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(lambda c: _evaluate_chunk(s, c), chunks))
    # reduce in trial order so the result does not depend on scheduling
    results: list[TrialResult] = []
    pc = PowerControlSummary()
    for res, part_pc in parts:
        results.extend(res)
        pc.merge(part_pc)
    stats = run_statistics(results, s.threshold_dbm, s.to_dict())
    manifest = RunManifest(s, stats, results, pc, started, _now())
    if out_dir is not None:
        write_outputs(manifest, out_dir, write_cdf=write_cdf)
    return manifest


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def trials_csv(manifest: RunManifest) -> str:
    buf = io.StringIO()
    buf.write(f"# scenario_hash: {manifest.scenario_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in manifest.results:
        c = r.active_counts
        w.writerow([
            r.trial_index,
            *(fmt_dbm(r.metric_dbm(m)) for m in METRICS),
            c[EmitterKind.GNB],
            c[EmitterKind.REPEATER_DOWN] + c[EmitterKind.REPEATER_UP],
            c[EmitterKind.UE],
        ])
    return buf.getvalue()


def cdf_csv(manifest: RunManifest) -> str:
    buf = io.StringIO()
    buf.write(f"# scenario_hash: {manifest.scenario_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dbm", "cdf"])
    st = manifest.statistics
    for v, p in zip(st.cdf_dbm, st.cdf_prob):
        w.writerow([fmt_dbm(float(v)), f"{p:.6f}"])
    return buf.getvalue()


def manifest_json(manifest: RunManifest) -> str:
    return json.dumps(manifest.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(manifest: RunManifest, out_dir, *, write_cdf: bool = False) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"trials": out / "trials.csv", "manifest": out / "manifest.json"}
    paths["trials"].write_text(trials_csv(manifest), encoding="utf-8")
    paths["manifest"].write_text(manifest_json(manifest), encoding="utf-8")
    if write_cdf:
        paths["cdf"] = out / "cdf.csv"
        paths["cdf"].write_text(cdf_csv(manifest), encoding="utf-8")
    return paths


# --------------------------------------------------------------------------
# paired comparison


@dataclass
class LoadedManifest:
    scenario: dict
    scenario_hash: str
    statistics: RunStatistics

    @classmethod
    def from_manifest(cls, m: RunManifest) -> "LoadedManifest":
        return cls(m.scenario.to_dict(), m.scenario_hash, m.statistics)


def load_manifest(path) -> LoadedManifest:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    try:
        d = json.loads(p.read_text(encoding="utf-8"))
        scenario = d["scenario"]
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc.msg}", line=exc.lineno) from None
    except (KeyError, TypeError):
        raise ConfigError(f"{p}: not a run manifest") from None
    # re-validate so a hand-edited manifest cannot smuggle in an invalid scenario
    resolved = scenario_from_dict(scenario)
    if resolved.hash() != d["scenario_hash"]:
        raise PairingError(f"{p}: scenario_hash does not match the embedded scenario")
    return LoadedManifest(scenario, d["scenario_hash"], RunStatistics.from_dict(d["statistics"], scenario))


def _knob_value(scenario: dict, knob: str):
    node = scenario
    for part in knob.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError("unknown scenario field", field=knob)
        node = node[part]
    return node


def compare(a: LoadedManifest | RunManifest, b: LoadedManifest | RunManifest, knob: str) -> dict:
    """Penalty of run ``a`` relative to run ``b``, which differ only in ``knob``."""
    if isinstance(a, RunManifest):
        a = LoadedManifest.from_manifest(a)
    if isinstance(b, RunManifest):
        b = LoadedManifest.from_manifest(b)
    va, vb = _knob_value(a.scenario, knob), _knob_value(b.scenario, knob)
    if scenario_hash(a.scenario, exclude=knob) != scenario_hash(b.scenario, exclude=knob):
        raise PairingError("manifests are not paired", paired_differences(a.scenario, b.scenario, knob))
    sa, sb = a.statistics, b.statistics
    metrics = {}
    for m in METRICS:
        metrics[m] = {
            "mean_penalty_db": ratio_db(sa[m].mean_w, sb[m].mean_w),
            "percentile_penalty_db": percentile_penalties(sa, sb, m),
        }
    report = {
        "knob": knob,
        "a_value": va,
        "b_value": vb,
        "a_hash": a.scenario_hash,
        "b_hash": b.scenario_hash,
        "metrics": metrics,
        # the dB sum of the two directional penalties, an approximation kept for comparison
        "approx_down_plus_up_penalty_db": metrics["down"]["mean_penalty_db"] + metrics["up"]["mean_penalty_db"],
    }
    if knob == "repeater_factor_f":
        report["closed_form_db"] = penalty_closed_form(va) - penalty_closed_form(vb)
    return jsonable(report)


# --------------------------------------------------------------------------
# sweeps


def parse_values(raw: str) -> list:
    out = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(json.loads(tok))
        except json.JSONDecodeError:
            out.append(tok)
    if not out:
        raise ConfigError("no values given", field="--values")
    return out


def sweep(s: Scenario, knob: str, values: Sequence, out_dir=None, *, threads=None) -> list[dict]:
    """Run one paired run per value; penalties are relative to the first value."""
    manifests = []
    for v in values:
        sv = set_knob(s, knob, v)
        sub = None if out_dir is None else Path(out_dir) / f"{knob}={v}"
        manifests.append(run(sv, sub, threads=threads))
    base = manifests[0]
    rows = []
    for v, m in zip(values, manifests):
        rep = compare(m, base, knob)
        row = {
            "value": v,
            "down_db": rep["metrics"]["down"]["mean_penalty_db"],
            "up_db": rep["metrics"]["up"]["mean_penalty_db"],
            "combined_db": rep["metrics"]["combined"]["mean_penalty_db"],
            "down_plus_up_db": rep["approx_down_plus_up_penalty_db"],
        }
        if "closed_form_db" in rep:
            row["closed_form_db"] = rep["closed_form_db"]
        rows.append(row)
    if out_dir is not None:
        Path(out_dir, "penalties.csv").write_text(penalty_table_csv(rows, s.hash(exclude=knob)),
                                                 encoding="utf-8")
    return rows


def _fmt_db(v) -> str:
    if isinstance(v, str):
        return v
    return fmt_dbm(v)


def penalty_table_csv(rows: list[dict], scenario_hash: str) -> str:
    cols = ["value", "down_db", "up_db", "combined_db", "down_plus_up_db"]
    if rows and "closed_form_db" in rows[0]:
        cols.append("closed_form_db")
    buf = io.StringIO()
    buf.write(f"# scenario_hash_excluding_knob: {scenario_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r["value"]] + [_fmt_db(r[c]) for c in cols[1:]])
    return buf.getvalue()
