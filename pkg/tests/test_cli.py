import json
import subprocess
import sys

from qpcocycle.cli import main


def test_estimate(tmp_path, capsys):
    code = main(["estimate", "--lambda", "4", "--energy", "0.5", "--scale-n", "200", "--grid-m", "64",
                 "--out", str(tmp_path), "--threads", "1"])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert "summary.json" in out["files"]


def test_config_errors(tmp_path):
    assert main(["estimate", "--grid-m", "8", "--out", str(tmp_path)]) == 2
    assert main(["estimate", "--no-such-flag"]) == 2
    assert main(["bogus"]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "estimate", "unknown_key": 1}))
    assert main(["estimate", "--config", str(cfg)]) == 2
    assert main(["estimate", "--config", str(tmp_path / "missing.json")]) == 2


def test_config_file_overridden(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"lambda": 2.0, "rational": "1/3"}))
    assert main(["amo-spectrum", "--config", str(cfg), "--lambda", "0", "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["lambda"] == 0.0 and summary["band_count"] == 1


def test_budget_exit_code(tmp_path):
    code = main(["schedule", "--kappa", "0.009", "--q0", "13", "--n0", "200", "--verify", "--max-steps", "1000",
                 "--grid-m", "64", "--out", str(tmp_path)])
    assert code == 3


def test_module_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qpcocycle", "amo-spectrum", "--lambda", "2", "--rational", "1/2", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "bands.csv").read_text().startswith("band,E_lo,E_hi")
