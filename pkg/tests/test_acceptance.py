"""Exit criteria for the simulator, each checked at its stated tolerance."""

import math
import time

import numpy as np
import pytest

from oobe_mc.aggregation import aggregate_trial, penalty_closed_form, penalty_empirical
from oobe_mc.antenna import OobeCorrelation
from oobe_mc.deployment import TrialDeployment, generate_trial
from oobe_mc.emitters import EmitterKind, PowerControlConfig
from oobe_mc.geometry import SounderGeometry
from oobe_mc.propagation import fspl
from oobe_mc.runner import manifest_json, run, trials_csv
from oobe_mc.scenario import Scenario, UeAttach
from oobe_mc.units import DecibelPower, bandwidth_rescale

from factories import random_nodes
from oracles import brute_force_total_w

PENALTY_TOL_DB = 0.3
TRIALS = 1000


@pytest.fixture(scope="module")
def f_sweep():
    base = Scenario(trials=TRIALS, master_seed=2026)
    assert base.oobe_limits.repeater is None  # repeaters inherit the gNB OOBE
    runs, seconds = {}, {}
    for f in (0, 1, 2, 4):
        t0 = time.perf_counter()
        runs[f] = run(base.replace(repeater_factor_f=f), threads=1)
        seconds[f] = time.perf_counter() - t0
    return base, runs, seconds


@pytest.mark.parametrize("f", [1, 2, 4])
def test_1_repeater_penalty(f_sweep, f, acceptance):
    base, runs, seconds = f_sweep
    mean_gnbs = base.gnb_density_per_km2 * base.geometry.area_km2
    got = penalty_empirical(runs[f].statistics, runs[0].statistics, "down")
    want = penalty_closed_form(f)
    acceptance(
        f"1  repeater penalty F={f}",
        abs(got - want) <= PENALTY_TOL_DB and seconds[f] < 60.0,
        f"empirical {got:.3f} dB vs 10log10(1+F) {want:.3f} dB (tol {PENALTY_TOL_DB}); "
        f"{TRIALS} trials x ~{mean_gnbs:.0f} gNBs in {seconds[f]:.1f} s",
    )


def test_2_bandwidth_rescale(acceptance):
    p = bandwidth_rescale(DecibelPower(-70.0, 10e3), 200e6)
    acceptance("2  -70 dBm/10 kHz -> 200 MHz", abs(p.dbm - (-26.99)) <= 0.01 and p.ref_bandwidth_hz == 200e6,
               f"{p.dbm:.4f} dBm")


def test_3_upstream_doubling(acceptance):
    relay = Scenario(trials=20, master_seed=31, repeater_factor_f=1, ue_attach=UeAttach.REPEATER,
                     repeaters_relay_upstream=True)
    baseline = relay.replace(repeater_factor_f=0)
    ratios = []
    ok = True
    for i in range(relay.trials):
        a, b = generate_trial(relay, i), generate_trial(baseline, i)
        up_a = a.count(EmitterKind.UE) + a.count(EmitterKind.REPEATER_UP)
        up_b = b.count(EmitterKind.UE) + b.count(EmitterKind.REPEATER_UP)
        ok &= up_b > 0 and up_a == 2 * up_b
        ratios.append(up_a / up_b)
    acceptance("3  upstream emitter doubling", ok, f"count ratio over {relay.trials} trials: {sorted(set(ratios))}")


@pytest.fixture(scope="module")
def pc_runs():
    on = Scenario(trials=TRIALS, master_seed=404, high_power_ue_fraction=0.2)
    off = on.replace(power_control=PowerControlConfig(enabled=False),
                     high_power_power_control=PowerControlConfig(enabled=False, p_max_dbm=40.0))
    return on, run(on, threads=1), run(off, threads=1)


def test_4a_reduction_bounded(acceptance):
    s = Scenario(trials=200, master_seed=405, high_power_ue_fraction=0.3,
                 high_power_power_control=PowerControlConfig(enabled=True, p_max_dbm=40.0))
    lo, hi, ok = math.inf, -math.inf, True
    for i in range(s.trials):
        t = generate_trial(s, i).table
        ue = t.kind == EmitterKind.UE
        for flag, pc in ((False, s.power_control), (True, s.high_power_power_control)):
            l = t.l_pwrctl_db[ue & (t.high_power == flag)]
            if len(l):
                ok &= bool(np.all((l >= 0) & (l <= pc.p_max_dbm - pc.p_min_dbm)))
                lo, hi = min(lo, l.min()), max(hi, l.max())
    acceptance("4a per-UE L_PwrCtl within [0, p_max - p_min]", ok, f"observed range {lo:.2f}..{hi:.2f} dB")


def test_4b_dominance(pc_runs, acceptance):
    _, on, off = pc_runs
    worst = math.inf
    ok = True
    for r_on, r_off in zip(on.results, off.results):
        for m in ("gnb", "rep_down", "ue", "rep_up", "down", "up", "combined"):
            a, b = r_on.metric_w(m), r_off.metric_w(m)
            ok &= b >= a
        if r_on.up_w > 0:
            worst = min(worst, r_off.up_w / r_on.up_w)
    acceptance("4b power control off never lowers any aggregate", ok,
               f"{len(on.results)} paired trials; smallest upstream off/on ratio {10 * math.log10(worst):.3f} dB")


def test_4c_reduction_span(acceptance):
    m = run(Scenario(trials=TRIALS, master_seed=406), threads=1)
    pc = m.pwrctl
    acceptance("4c default L_PwrCtl spans 0 to >= 40 dB", pc.min_db <= 1e-9 and pc.max_db >= 40.0,
               f"{pc.count} UEs, min {pc.min_db:.2f} dB, max {pc.max_db:.2f} dB")


def test_5_fspl(acceptance):
    one = fspl(23.8e9, 1.0)
    steps = [fspl(23.8e9, 2 * d) - fspl(23.8e9, d) for d in (0.5, 1.0, 824.0, 3000.0)]
    ok = abs(one - 119.98) <= 0.01 and all(abs(s - 6.0206) <= 0.001 for s in steps)
    acceptance("5  FSPL oracle", ok, f"fspl(23.8 GHz, 1 km) = {one:.4f} dB; doubling steps {[round(s, 5) for s in steps]}")


def test_6_brute_force_oracle(acceptance):
    rng = np.random.default_rng(6)
    worst = 0.0
    for k in range(50):
        s = Scenario(oobe_correlation=OobeCorrelation.CORRELATED if k % 2 else OobeCorrelation.UNCORRELATED,
                     geometry=SounderGeometry(elevation_deg=float(rng.uniform(30, 90))))
        nodes = random_nodes(rng, s, int(rng.integers(1, 11)))
        got = aggregate_trial(TrialDeployment.from_emitters(nodes), s).combined_w
        want = brute_force_total_w(nodes, s)
        rel = 0.0 if got == want else abs(got - want) / want
        worst = max(worst, rel)
    acceptance("6  brute-force aggregation oracle", worst <= 1e-9, f"worst relative error {worst:.2e} over 50 deployments")


def test_7_determinism(tmp_path, acceptance):
    s = Scenario(trials=200, master_seed=77, repeater_factor_f=2)
    m1, m2 = run(s, threads=1), run(s, threads=4)

    def strip(text):
        return "\n".join(l for l in text.splitlines() if '"started_at"' not in l and '"finished_at"' not in l)

    same_csv = trials_csv(m1).encode() == trials_csv(m2).encode()
    same_manifest = strip(manifest_json(m1)) == strip(manifest_json(m2))
    acceptance("7  byte-identical CSV and manifest", same_csv and same_manifest,
               f"csv {'identical' if same_csv else 'differs'}, manifest {'identical' if same_manifest else 'differs'}")


def test_8_convergence(acceptance):
    base = Scenario(gnb_density_per_km2=0.01)
    batches = 60  # fewer batches make the SE estimate itself too noisy to test a factor of 2
    se = {}
    for n in (100, 400, 1600):
        means = [run(base.replace(trials=n, master_seed=10_000 * n + k), threads=1).statistics["combined"].mean_w
                 for k in range(batches)]
        se[n] = float(np.std(means, ddof=1))
    r1, r2 = se[100] / se[400], se[400] / se[1600]
    scaled = [se[n] * math.sqrt(n) for n in se]
    ok = 1.0 <= r1 <= 4.0 and 1.0 <= r2 <= 4.0 and max(scaled) / min(scaled) <= 2.0
    acceptance("8  standard error ~ 1/sqrt(trials)", ok,
               f"SE ratios {r1:.2f}, {r2:.2f} (ideal 2, allowed 1..4); SE*sqrt(N) spread {max(scaled) / min(scaled):.2f}x")
