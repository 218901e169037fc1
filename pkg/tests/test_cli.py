import csv
import json
import subprocess
import sys

import pytest

from rcspatial.cli import main


@pytest.fixture
def workdir(tmp_path):
    cfg = {
        "variable": "synthetic",
        "sweep_axis": "longitude",
        "offsets": [-3, 2],
        "years": [2021],
        "methods": ["esn", "var"],
        "n_reservoir": 50,
        "data_root": str(tmp_path / "data"),
        "output_dir": str(tmp_path / "out"),
        "synthetic": {"driver_seed": 3, "lag_per_degree": 0.5},
        "tune": {
            "density_values": [0.05, 0.1],
            "input_scaling_values": [0.2],
            "spectral_radius_values": [0.5],
            "ridge_beta_values": [0.1, 1.0],
            "calibration_offsets": [2],
        },
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return tmp_path, path


def test_full_workflow(workdir, capsys):
    root, cfg = workdir
    assert main(["gen-synthetic", "--config", str(cfg)]) == 0
    assert (root / "data" / "synthetic" / "35.00_136.00.csv").exists()
    assert (root / "data" / "synthetic" / "35.00_139.00.meta.json").exists()
    assert main(["ingest-check", "--config", str(cfg)]) == 0

    # VAR is collinear at offset 0, so the sweep reports a partial failure.
    assert main(["sweep", "--config", str(cfg)]) == 3
    out = root / "out"
    for name in ("records.csv", "summary.json", "regression.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["failures"][0]["method"] == "var" and summary["failures"][0]["offset"] == 0.0
    assert summary["config"]["n_reservoir"] == 50
    with open(out / "records.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 * 3 - 1

    assert main(["analyze", "--config", str(cfg), "--records", str(out / "records.csv"), "--output-dir", str(root / "re")]) == 0
    again = json.loads((root / "re" / "summary.json").read_text())
    assert again["aggregates"] == summary["aggregates"]
    assert again["baseline_nrmse"] == summary["baseline_nrmse"]

    assert main(["tune", "--config", str(cfg)]) == 0
    best = json.loads((out / "best_params.json").read_text())
    assert set(best["esn"]) == {"density", "input_scaling", "spectral_radius", "ridge_beta"}
    with open(out / "score_table.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 4


def test_overrides(workdir):
    root, cfg = workdir
    assert main(["gen-synthetic", "--config", str(cfg)]) == 0
    code = main(
        ["sweep", "--config", str(cfg), "--years", "2021", "--seed", "4", "--output-dir", str(root / "o2")]
    )
    assert code == 3
    cfg_used = json.loads((root / "o2" / "summary.json").read_text())["config"]
    assert cfg_used["seed"] == 4 and cfg_used["years"] == [2021]


def test_exit_codes(workdir, capsys):
    root, cfg = workdir
    assert main(["sweep", "--config", str(root / "missing.json")]) == 1
    bad = root / "bad.json"
    bad.write_text('{"colour": "red"}')
    assert main(["sweep", "--config", str(bad)]) == 1
    bad.write_text("{not json")
    assert main(["sweep", "--config", str(bad)]) == 1
    assert main(["sweep", "--config", str(cfg), "--years", "x"]) == 1
    # No data generated yet.
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert main(["ingest-check", "--config", str(cfg)]) == 2
    assert main(["analyze", "--config", str(cfg)]) == 2
    assert "data error" in capsys.readouterr().err


def test_ingest_check_reports_short_history(workdir, capsys):
    root, cfg = workdir
    assert main(["gen-synthetic", "--config", str(cfg)]) == 0
    assert main(["ingest-check", "--config", str(cfg), "--years", "2021,2030"]) == 2
    assert "InsufficientHistory" in capsys.readouterr().out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "rcspatial", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("gen-synthetic", "ingest-check", "tune", "sweep", "analyze"):
        assert cmd in out.stdout
