import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from objloc.cli import main
from objloc.sim import CSV_HEADER, SWEEP_HEADER

FIX = Path(__file__).parent / "fixtures"
NOISY = sorted(int(p.stem.rsplit("_", 1)[1]) for p in FIX.glob("noisy_global_*.json"))


def run_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_gen_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--objects", "20", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--objects", "20", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["objects"]) == 20


def test_gen_variants(tmp_path):
    out, dyn, loc = tmp_path / "g.json", tmp_path / "d.json", tmp_path / "l.json"
    assert main(["gen", "--objects", "10", "--seed", "2", "--out", str(out), "--dynamic-out", str(dyn),
                 "--local-out", str(loc), "--observe", "4"]) == 0
    assert len(json.loads(dyn.read_text())["objects"]) == 10
    local = json.loads(loc.read_text())
    assert len(local["objects"]) == 4 and set(local["gt_pose"]) == {"rotation", "translation"}


def test_gen_from_config(tmp_path):
    out = tmp_path / "g.json"
    assert main(["gen", "--config", "configs/bench.json", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["objects"]) == 20


def test_gen_infeasible(tmp_path, capsys):
    code = main(["gen", "--objects", "40", "--extent", "1", "1", "1", "--min-separation", "2",
                 "--out", str(tmp_path / "x.json")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_run_noise_free_fixture(capsys):
    r = run_json(capsys, "run", "--global", str(FIX / "unique_global.json"), "--local", str(FIX / "unique_local.json"))
    assert r["status"] == "decided"
    assert all(a == b for a, b in r["decided"]["pairs"]) and len(r["decided"]["pairs"]) == 5
    assert r["rms_residual"] < 1e-9
    assert r["errors"]["success"] and r["errors"]["rot_err_deg"] < 1e-6


def test_run_ambiguous_fixture(capsys, tmp_path):
    pool = tmp_path / "pool.json"
    r = run_json(capsys, "run", "--global", str(FIX / "chairs_global.json"), "--local", str(FIX / "chairs_local.json"),
                 "--pool-out", str(pool))
    assert r["status"] == "ambiguous" and "pose" not in r
    assert [t["score"] for t in r["top"][:2]] == [0.0, 0.0]
    assert len(json.loads(pool.read_text())["sets"]) == 2


def _failures(capsys, *extra):
    bad = 0
    for s in NOISY:
        r = run_json(capsys, "run", "--mode", "yaw_only", "--global", str(FIX / f"noisy_global_{s}.json"),
                     "--local", str(FIX / f"noisy_local_{s}.json"), *extra)
        bad += not r.get("errors", {}).get("success", False)
    return bad


def test_strict_gamma_fails_more_on_noisy_fixtures(capsys):
    default, strict = _failures(capsys), _failures(capsys, "--gamma", "0.99")
    assert (default, strict) == (4, 6)


def test_run_with_explicit_gt_and_out(tmp_path):
    local = json.loads((FIX / "unique_local.json").read_text())
    gt = tmp_path / "gt.json"
    gt.write_text(json.dumps(local["gt_pose"]))
    out = tmp_path / "report.json"
    assert main(["run", "--global", str(FIX / "unique_global.json"), "--local", str(FIX / "unique_local.json"),
                 "--gt-pose", str(gt), "--out", str(out), "--top-k", "3"]) == 0
    report = json.loads(out.read_text())
    assert report["errors"]["trans_err_m"] < 1e-6 and len(report["top"]) == 3


@pytest.mark.parametrize("payload", ["{not json", json.dumps({"objects": [{"id": 1}]})])
def test_run_schema_violation(tmp_path, payload):
    bad = tmp_path / "bad.json"
    bad.write_text(payload)
    assert main(["run", "--global", str(bad), "--local", str(FIX / "unique_local.json")]) == 2


def test_missing_file_and_bad_params(tmp_path):
    assert main(["run", "--global", str(tmp_path / "none.json"), "--local", str(FIX / "unique_local.json")]) == 2
    assert main(["run", "--gamma", "1.5", "--global", str(FIX / "unique_global.json"),
                 "--local", str(FIX / "unique_local.json")]) == 2


@pytest.fixture
def small_config(tmp_path):
    cfg = json.loads(Path("configs/bench.json").read_text())
    cfg["scene"]["n_objects"] = 10
    cfg["scene"]["class_catalog"] = [["chair", 5], ["table", 5]]
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_bench_csv(small_config, capsys):
    assert main(["bench", "--config", str(small_config), "--trials", "3", "--jobs", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 15
    for row in rows:
        assert row["success"] in ("0", "1") and float(row["wall_time_s"]) >= 0


def test_sweep_csv(small_config, tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(small_config), "--trials", "2", "--gammas", "0.7", "0.8",
                 "--top-ks", "1", "10", "--object-counts", "3", "5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert tuple(rows[0]) == SWEEP_HEADER and len(rows) == 8
    for row in rows:
        assert 0 <= float(row["success_rate"]) <= 1 and int(row["trials"]) == 2


def test_sweep_rejects_bad_grid(small_config):
    assert main(["sweep", "--config", str(small_config), "--trials", "1", "--top-ks", "0"]) == 2
    assert main(["sweep", "--config", str(small_config), "--trials", "1", "--gammas", "1.2"]) == 2


def test_module_entry_point_and_log_level():
    env = {**os.environ, "OBJLOC_LOG": "debug"}
    proc = subprocess.run([sys.executable, "-m", "objloc", "run", "--global", str(FIX / "unique_global.json"),
                           "--local", str(FIX / "unique_local.json")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "decided"
    assert "DEBUG" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "objloc", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
