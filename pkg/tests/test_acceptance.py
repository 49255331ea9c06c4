"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

Run on its own with ``python3 tests/test_acceptance.py`` or ``pytest tests/test_acceptance.py -s``.
"""

import math
import time
from pathlib import Path

import pytest

from qpcocycle.almost_mathieu import periodic_spectrum
from qpcocycle.diophantine import continued_fraction
from qpcocycle.experiments import ExperimentConfig, run_experiment
from qpcocycle.multiscale import build_schedule, step_residuals

LOG2 = math.log(2)
LOG_RHO3 = math.log((3 + math.sqrt(5)) / 2)

TOL_SUPER = 0.05
TOL_SUB = 0.02
RUNTIME_LIMIT = 120.0
TOL_FREE = 1e-4
C_FIT_MAX = 50.0
SLOPE_MAX = -0.8
TOL_DIAGONAL = 1e-10
TOL_AFFINE = 1e-12
R2_MIN = 0.7
MIN_WINS = 4
TOL_UNIFORM = 0.05
E_RESOLUTION = 1e-6
MIN_GAP = 0.05

# the experiment behind each criterion; rerun once more for the determinism check
RUNS = {
    "c1": dict(kind="corollary2", lam=4.0, omega="golden", q_probe=89, n_energies=20, scale_n=10**4, grid_m=512),
    "c2": dict(kind="corollary2", lam=1.0, omega="golden", q_probe=89, n_energies=20, scale_n=10**4, grid_m=512),
    "c3_extrap": dict(kind="estimate", potential={"cos": [0.0]}, energy=3.0, scale_n=1000, grid_m=64),
    "c3_rotation": dict(kind="estimate", potential={"cos": [0.0]}, energy=0.0, scale_n=4, grid_m=64),
    "c4": dict(kind="avalanche_fuzz", seed=7, trials=1000, n=20, mu_floors=[1e2, 1e3, 1e4], factored_trials=100),
    "c6": dict(kind="deviation_decay", lam=4.0, omega="golden", kappa=0.1, q_values=[8, 13, 21, 34, 55],
               scale_c=0.01, grid_m=8192),
    "c7": dict(kind="corollary2", lam=4.0, omega="golden", q_probe=89, n_energies=5, scale_n=1000, grid_m=512,
               reference_scale=10**5),
    "c8": dict(kind="uniform_bound", lam=4.0, omega="golden", q_probe=89, n_energies=64, scales=[1000, 10000],
               grid_m=512),
    "c9": dict(kind="amo_spectrum", lam=2.0, rational="1/2", e_resolution=E_RESOLUTION),
    "c10": dict(kind="omega_continuity", lam=4.0, rational="0/1", delta=1e-3, omega="golden", scale_n=10**4,
                grid_m=512, n_offsets=4),
}


def _snapshot(out: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.suffix in (".csv", ".json")}


@pytest.fixture(scope="session")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    results = {}
    for key, cfg in RUNS.items():
        config = ExperimentConfig.model_validate({**cfg, "out": str(root / key)})
        t0 = time.perf_counter()
        res = run_experiment(config)
        results[key] = (config, res, time.perf_counter() - t0, _snapshot(res.out_dir))
    return results


def test_criterion_01_supercritical(runs, report_line):
    _, res, elapsed, _ = runs["c1"]
    dev = res.summary["max_abs_deviation"]
    ok = dev < TOL_SUPER and elapsed < RUNTIME_LIMIT and res.summary["n_energies"] == 20
    report_line(1, ok, f"lambda=4 max|L - log 2| = {dev:.3e} (< {TOL_SUPER}), {elapsed:.1f} s (< {RUNTIME_LIMIT:.0f} s)")
    assert ok


def test_criterion_02_subcritical(runs, report_line):
    _, res, _, _ = runs["c2"]
    dev = res.summary["max_abs_deviation"]
    ok = dev < TOL_SUB and res.summary["target"] == 0.0
    report_line(2, ok, f"lambda=1 max|L - 0| = {dev:.3e} (< {TOL_SUB})")
    assert ok


def test_criterion_03_constant_oracle(runs, report_line):
    err = abs(runs["c3_extrap"][1].summary["L_extrap"] - LOG_RHO3)
    zero = runs["c3_rotation"][1].summary["L_N"]
    ok = err < TOL_FREE and zero == 0.0
    report_line(3, ok, f"|L_extrap - log((3+sqrt5)/2)| = {err:.3e} (< {TOL_FREE}); E=0 N=4 L_N = {zero!r}")
    assert ok


def test_criterion_04_avalanche(runs, report_line):
    _, res, _, snap = runs["c4"]
    s = res.summary
    rows = snap["avalanche_trials.csv"].decode().splitlines()[1:]
    c_fit = s["C_fit"]
    bound_ok = all(float(r.split(",")[2]) <= c_fit * s["n"] / float(r.split(",")[0]) * (1 + 1e-12) for r in rows)
    ok = (
        len(rows) == 3 * 1000
        and c_fit < C_FIT_MAX
        and bound_ok
        and s["loglog_slope"] <= SLOPE_MAX
        and s["diagonal_max_residual"] < TOL_DIAGONAL
        and s["factored_all_within"]
    )
    report_line(
        4, ok,
        f"C_fit = {c_fit:.4f} (< {C_FIT_MAX}), slope = {s['loglog_slope']:.3f} (<= {SLOPE_MAX}), "
        f"diagonal = {s['diagonal_max_residual']:.1e} (< {TOL_DIAGONAL}), "
        f"factored N=27,54 worst residual/bound = {s['factored_worst_ratio']:.3f} with C1 = 5 C_fit",
    )
    assert ok


def test_criterion_05_affine_annihilation(report_line):
    a, b = LOG2, 0.3
    law = lambda k: a + b / k
    sched = build_schedule(continued_fraction("golden", 10**4), 0.01, 60, 5)
    res = step_residuals(law, sched, 0)
    parts = {"three-scale m-combination": res.lemma6, "N'-combination": res.lemma7, "ladder step": res.step47}
    ok = all(v < TOL_AFFINE for v in parts.values())
    detail = ", ".join(f"{k} = {v:.3e}" for k, v in parts.items())
    report_line(5, ok, f"L_K = log2 + 0.3/K: {detail} (each < {TOL_AFFINE})")
    assert ok


def test_criterion_06_deviation_decay(runs, report_line):
    fit = runs["c6"][1].summary["fit"]
    ok = fit["sufficient"] and fit["slope"] < 0 and fit["r_squared"] > R2_MIN
    report_line(6, ok, f"slope = {fit['slope']:.4f} (< 0), r^2 = {fit['r_squared']:.3f} (> {R2_MIN})")
    assert ok


def test_criterion_07_extrapolation_beats_raw(runs, report_line):
    s = runs["c7"][1].summary
    wins = s["extrap_better_count"]
    ok = wins >= MIN_WINS and s["n_energies"] == 5
    report_line(7, ok, f"extrapolation closer to the N=1e5 reference at {wins}/5 probes (>= {MIN_WINS})")
    assert ok


def test_criterion_08_uniform_bound(runs, report_line):
    s = runs["c8"][1].summary
    e3, e4 = s["max_excess"]["1000"], s["max_excess"]["10000"]
    ok = e4 < e3 and e4 < TOL_UNIFORM and s["n_energies"] == 64
    report_line(8, ok, f"max excess N=1e3 {e3:.4f} -> N=1e4 {e4:.4f} (decreasing, < {TOL_UNIFORM})")
    assert ok


def test_criterion_09_two_periodic_spectrum(runs, report_line):
    bands = runs["c9"][1].summary["bands"]
    edge = 2 * math.sqrt(2)
    direct = periodic_spectrum(2.0, 1, 2, E_resolution=E_RESOLUTION).bands
    err = max(abs(bands[0][0] + edge), abs(bands[0][1] - edge))
    ok = len(bands) == 1 and err <= E_RESOLUTION and [list(b) for b in direct] == bands
    report_line(9, ok, f"edges {bands[0][0]:.7f}, {bands[0][1]:.7f}; max error {err:.2e} (<= {E_RESOLUTION})")
    assert ok


def test_criterion_10_rational_discontinuity(runs, report_line):
    s = runs["c10"][1].summary
    gaps = s["gaps"]
    ok = max(gaps) > MIN_GAP
    detail = ", ".join(f"E={e:.3f}: {g:.2e}" for e, g in zip(s["energies"], gaps))
    report_line(10, ok, f"|L(E,0) - L(E,0+1e-3*golden)| at interior probes {detail} (need > {MIN_GAP})")
    assert ok


def test_criterion_11_determinism(runs, report_line):
    mismatched = []
    for key, (config, _, _, first) in runs.items():
        again = run_experiment(config)
        second = _snapshot(again.out_dir)
        if first != second:
            mismatched.append(key)
    ok = not mismatched
    report_line(11, ok, f"{len(runs)} runs repeated, byte-identical CSV/JSON" + (f"; differ: {mismatched}" if mismatched else ""))
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-s", "-q"]))
