import csv
import json
import math

import pytest
from pydantic import ValidationError

from qpcocycle.experiments import (
    ExperimentConfig,
    fit_exponential_decay,
    load_config,
    run_experiment,
)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_fit_exact_exponential():
    fit = fit_exponential_decay([(1, math.exp(-1)), (2, math.exp(-2)), (3, math.exp(-3))])
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_constant_and_sparse():
    fit = fit_exponential_decay([(1, 0.5), (2, 0.5), (3, 0.5), (4, 0.5)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12) and 0 <= fit.r_squared <= 1
    fit = fit_exponential_decay([(1, 0.5), (2, 0.0), (3, 0.1), (4, 0.0)])
    assert not fit.sufficient and fit.dropped == 2 and math.isnan(fit.slope)


def test_config_rejects_unknown_and_invalid():
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="estimate", colour="red")
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="estimate", grid_m=16)
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="schedule_trace", kappa=0.05)
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="nonsense")
    with pytest.raises(ValidationError):
        ExperimentConfig(kind="estimate", omega="1.5")
    cfg = ExperimentConfig.model_validate({"kind": "estimate", "lambda": 2.5})
    assert cfg.lam == 2.5 and cfg.resolved()["lambda"] == 2.5


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"kind": "estimate", "lambda": 3.0, "scale_n": 50}))
    cfg = load_config(path, {"scale_n": 70})
    assert cfg.lam == 3.0 and cfg.scale_n == 70
    path.write_text(json.dumps({"kind": "estimate", "typo": 1}))
    with pytest.raises(ValidationError):
        load_config(path)


def test_estimate_run_and_determinism(tmp_path):
    cfg = ExperimentConfig(kind="estimate", scale_n=500, grid_m=64, energy=0.5, out=str(tmp_path / "a"))
    r1 = run_experiment(cfg)
    r2 = run_experiment(cfg.model_copy(update={"out": str(tmp_path / "b")}))
    for f in ("estimate.csv", "summary.json", "manifest.json"):
        assert (r1.out_dir / f).read_bytes() == (r2.out_dir / f).read_bytes() or f == "manifest.json"
    row = read_csv(r1.out_dir / "estimate.csv")[0]
    assert float(row["L_extrap"]) == 2 * float(row["L_2N"]) - float(row["L_N"])
    man = json.loads((r1.out_dir / "manifest.json").read_text())
    assert man["seed"] == 0 and "numpy" in man["versions"] and man["config"]["kind"] == "estimate"


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QPCOCYCLE_OUT", str(tmp_path))
    r = run_experiment(ExperimentConfig(kind="amo_spectrum", lam=2.0, rational="1/2"))
    assert r.out_dir == tmp_path / "amo_spectrum"
    assert (tmp_path / "amo_spectrum" / "bands.csv").exists()


def test_io_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        run_experiment(ExperimentConfig(kind="amo_spectrum", rational="1/2", out=str(blocker / "sub")))


def test_energy_scan(tmp_path):
    cfg = ExperimentConfig(kind="energy_scan", lam=4.0, e_min=-5, e_max=5, e_step=0.05, scale_n=2000,
                           out=str(tmp_path), plots=True)
    r = run_experiment(cfg)
    rows = read_csv(tmp_path / "energy_scan.csv")
    assert len(rows) == 201
    assert list(rows[0]) == ["E", "L_N", "L_2N", "L_extrap", "in_probe_spectrum"]
    for row in rows:
        assert float(row["L_extrap"]) == 2 * float(row["L_2N"]) - float(row["L_N"])
    assert r.summary["on_spectrum_count"] > 0
    assert r.summary["min_L_extrap_on_spectrum"] >= math.log(2) - 0.05
    assert (tmp_path / "energy_scan.svg").read_text().startswith("<svg")


def test_deviation_decay(tmp_path):
    r = run_experiment(ExperimentConfig(kind="deviation_decay", grid_m=2048, out=str(tmp_path)))
    rows = read_csv(tmp_path / "deviation.csv")
    assert [int(x["q"]) for x in rows] == [8, 13, 21, 34, 55]
    assert r.summary["fit"]["slope"] < 0


def test_deviation_rejects_non_convergent(tmp_path):
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(kind="deviation_decay", q_values=[8, 12, 21], out=str(tmp_path)))


def test_avalanche_summary(tmp_path):
    r = run_experiment(ExperimentConfig(kind="avalanche_fuzz", seed=7, trials=40, factored_trials=5, out=str(tmp_path)))
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["C_fit"] == r.summary["C_fit"] and s["C_fit"] > 0
    assert set(s["hypothesis_failures"]) == {"100.0", "1000.0", "10000.0"}
    assert s["factored_all_within"]


def test_schedule_trace(tmp_path):
    r = run_experiment(ExperimentConfig(kind="schedule_trace", kappa=0.009, omega="golden", q0=13, n0=200,
                                        verify=True, grid_m=64, out=str(tmp_path)))
    assert r.summary["q"][1] == 514229
    assert r.summary["residuals_level0"]["step47"] < 0.01
