import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dropflow import snapshots
from dropflow.cli import main


SCENE = {
    "name": "pair",
    "drops": [
        {"preset": "circle", "n": 48, "lambda": 2.0,
         "params": {"center": [0, 0], "radius": 1.0}},
        {"preset": "ellipse", "n": 48, "lambda": 1.0,
         "params": {"center": [2.6, 0], "a": 0.5, "b": 0.3}},
    ],
    "solver": {"rk_tol": 1e-8, "gmres_tol": 1e-10},
    "outputs": {"snapshot_interval": 0.5,
                "field_grid": {"nx": 6, "ny": 5, "bounds": [-2, 4, -2, 2],
                               "times": [0.0]}},
    "t_max": 1.2,
}


@pytest.fixture()
def scene_file(tmp_path):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(SCENE))
    return str(path)


def test_run_writes_all_artifacts(scene_file, tmp_path):
    out = str(tmp_path / "out")
    rc = main(["run", scene_file, "--out-dir", out])
    assert rc == 0
    names = sorted(os.listdir(out))
    assert "diag.txt" in names and "benchmark.txt" in names
    assert "field_000.txt" in names
    snaps = [n for n in names if n.startswith("snap_")]
    assert len(snaps) >= 3
    st = snapshots.read_snapshot(os.path.join(out, snaps[-1]))
    assert len(st.boundaries) == 2
    assert st.boundaries[0].n == 48
    pts, u, t, header = snapshots.read_field(os.path.join(out, "field_000.txt"))
    assert pts.size == 30 and np.all(np.isfinite(u))
    bench = snapshots.read_benchmark(os.path.join(out, "benchmark.txt"))
    assert len(bench["drops"]) == 2


def test_run_rerun_bit_identical(scene_file, tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(["run", scene_file, "--out-dir", out1, "--t-max", "0.6"]) == 0
    assert main(["run", scene_file, "--out-dir", out2, "--t-max", "0.6"]) == 0
    for n in os.listdir(out1):
        if n.startswith("snap_"):
            with open(os.path.join(out1, n), "rb") as f1, \
                    open(os.path.join(out2, n), "rb") as f2:
                assert f1.read() == f2.read()


def test_resume_matches_uninterrupted(scene_file, tmp_path):
    full, part, cont = (str(tmp_path / d) for d in ("full", "part", "cont"))
    assert main(["run", scene_file, "--out-dir", full]) == 0
    assert main(["run", scene_file, "--out-dir", part, "--t-max", "0.6"]) == 0
    snaps = sorted(n for n in os.listdir(part) if n.startswith("snap_"))
    resume_from = os.path.join(part, snaps[-2])
    assert main(["run", scene_file, "--resume", resume_from,
                 "--out-dir", cont]) == 0
    s_res = snapshots.read_snapshot(os.path.join(cont, "snap_000001.txt"))
    match = None
    for n in sorted(os.listdir(full)):
        if n.startswith("snap_"):
            s = snapshots.read_snapshot(os.path.join(full, n))
            if abs(s.t - s_res.t) < 1e-12:
                match = s
    assert match is not None
    for a, b in zip(match.boundaries, s_res.boundaries):
        assert np.max(np.abs(a.markers - b.markers)) < 1e-12


def test_field_subcommand(scene_file, tmp_path):
    out = str(tmp_path / "out")
    assert main(["run", scene_file, "--out-dir", out, "--t-max", "0.3"]) == 0
    snap = os.path.join(out, "snap_000000.txt")
    dst = str(tmp_path / "f.txt")
    assert main(["field", snap, "5x4:-2:4:-2:2", "--out", dst]) == 0
    pts, u, t, header = snapshots.read_field(dst)
    assert pts.size == 20
    assert t == 0.0


def test_bench_circle_immediate_steady(tmp_path):
    out = str(tmp_path / "bench")
    rc = main(["bench", "circle", "--lambda", "4.0", "--out-dir", out])
    assert rc == 0
    bench = snapshots.read_benchmark(os.path.join(out, "benchmark.txt"))
    assert float(bench["t_steady"]) == 0.0


def test_validation_failures(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 1
    bad2 = tmp_path / "bad2.json"
    bad2.write_text(json.dumps({"drops": [
        {"preset": "circle", "n": 48, "lambda": -1.0}]}))
    assert main(["run", str(bad2)]) == 1
    # touching drops
    bad3 = tmp_path / "bad3.json"
    bad3.write_text(json.dumps({"drops": [
        {"preset": "circle", "n": 48, "params": {"radius": 1.0}},
        {"preset": "circle", "n": 48, "params": {"center": [1.5, 0],
                                                 "radius": 1.0}}]}))
    assert main(["run", str(bad3)]) == 1


def test_empty_field_grid(tmp_path):
    scene = dict(SCENE)
    scene["outputs"] = {"snapshot_interval": 0.5,
                        "field_grid": {"nx": 0, "ny": 0,
                                       "bounds": [-1, 1, -1, 1],
                                       "times": [0.0]}}
    scene["t_max"] = 0.1
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scene))
    out = str(tmp_path / "o")
    assert main(["run", str(path), "--out-dir", out]) == 0
    pts, u, t, header = snapshots.read_field(os.path.join(out, "field_000.txt"))
    assert pts.size == 0 and u.size == 0


def test_numerical_failure_exit_code(tmp_path):
    scene = {"drops": [{"preset": "ellipse", "n": 32, "lambda": 1.0,
                        "params": {"a": 1.0, "b": 0.7}}],
             "solver": {"rk_tol": 1e-300},
             "t_max": 1.0}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scene))
    assert main(["run", str(path), "--out-dir", str(tmp_path / "o")]) == 2


def test_console_entry_point(scene_file, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "dropflow.cli", "run", scene_file,
         "--out-dir", str(tmp_path / "o"), "--t-max", "0.2"],
        capture_output=True, text=True)
    assert proc.returncode == 0
