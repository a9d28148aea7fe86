"""Plot-tool tests against real files emitted by the simulator CLI."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from dropflow_plots import cli, parse, render


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    """A small scene driven through the simulator CLI (the external
    interface): snapshots plus one velocity-field grid."""
    root = tmp_path_factory.mktemp("artifacts")
    scene = {
        "name": "mini",
        "drops": [
            {"preset": "ellipse", "n": 48, "lambda": 1.0,
             "params": {"center": [0, 0], "a": 1.0, "b": 0.6}},
            {"preset": "circle", "n": 32, "lambda": 2.0,
             "params": {"center": [2.4, 0.2], "radius": 0.4}},
        ],
        "solver": {"rk_tol": 1e-7},
        "outputs": {"snapshot_interval": 0.3,
                    "field_grid": {"nx": 9, "ny": 7,
                                   "bounds": [-2, 4, -2, 2], "times": [0.0]}},
        "t_max": 1.0,
    }
    scene_path = root / "scene.json"
    scene_path.write_text(json.dumps(scene))
    out = root / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "dropflow.cli", "run", str(scene_path),
         "--out-dir", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return str(out)


def test_parse_snapshot_and_series(artifacts):
    series = parse.snapshot_series(artifacts)
    assert len(series) >= 3
    ts = [s.t for s in series]
    assert all(b > a for a, b in zip(ts, ts[1:]))
    for s in series:
        assert len(s.drops) == 2
        assert all(len(m) % 16 == 0 for m in s.drops)


def test_parser_round_trip(artifacts):
    series = parse.snapshot_series(artifacts)
    snap_path = os.path.join(artifacts, "snap_000000.txt")
    first = parse.parse_snapshot(snap_path)
    text = first.serialize()
    rt_path = snap_path + ".rt"
    with open(rt_path, "w") as fh:
        fh.write(text)
    again = parse.parse_snapshot(rt_path)
    assert again.t == first.t
    for a, b in zip(first.drops, again.drops):
        assert np.array_equal(a, b)
    grid = parse.parse_field(os.path.join(artifacts, "field_000.txt"))
    rt = os.path.join(artifacts, "field_rt.txt")
    with open(rt, "w") as fh:
        fh.write(grid.serialize())
    g2 = parse.parse_field(rt)
    assert np.array_equal(grid.points, g2.points)
    assert np.array_equal(grid.u, g2.u)


def test_malformed_line_reported_with_number(tmp_path, artifacts):
    src = os.path.join(artifacts, "field_000.txt")
    dst = tmp_path / "broken.txt"
    lines = open(src).read().splitlines()
    lines.insert(3, "1.0 2.0 nope")
    dst.write_text("\n".join(lines))
    with pytest.raises(parse.ParseError, match=r":4:"):
        parse.parse_field(str(dst))


def test_plot_boundaries_frames(artifacts, tmp_path):
    series = parse.snapshot_series(artifacts)
    times = [s.t for s in series][:3]
    paths = render.plot_boundaries(series, times, str(tmp_path / "frames"))
    assert len(paths) == 3
    for p in paths:
        assert os.path.getsize(p) > 2000


def test_plot_boundaries_empty_times(artifacts, tmp_path):
    series = parse.snapshot_series(artifacts)
    assert render.plot_boundaries(series, [], str(tmp_path)) == []


def test_nearest_snapshot_warning(artifacts, tmp_path):
    series = parse.snapshot_series(artifacts)
    with pytest.warns(UserWarning):
        render.plot_boundaries(series, [series[0].t + 0.123], str(tmp_path))


def test_plot_field_quiver(artifacts, tmp_path):
    grid = parse.parse_field(os.path.join(artifacts, "field_000.txt"))
    snap = parse.parse_snapshot(os.path.join(artifacts, "snap_000000.txt"))
    out = str(tmp_path / "quiver.png")
    render.plot_field(grid, out, snapshot=snap)
    assert os.path.getsize(out) > 2000


def test_zero_field_renders(tmp_path):
    pts = (np.arange(12) % 4) + 1j * (np.arange(12) // 4)
    grid = parse.FieldGrid(t=0.0, points=pts, u=np.zeros(12, dtype=complex))
    out = str(tmp_path / "zero.png")
    render.plot_field(grid, out)
    assert os.path.exists(out)


def test_render_hash_stable(artifacts):
    series = parse.snapshot_series(artifacts)

    def draw(fig, ax):
        m = series[0].drops[0]
        closed = np.append(m, m[0])
        ax.plot(closed.real, closed.imag, "-")
        ax.set_aspect("equal")

    h1 = render.render_rgba(draw)
    h2 = render.render_rgba(draw)
    assert h1 == h2


def test_cli_entry_points(artifacts, tmp_path):
    rc = cli.main_boundaries([artifacts, "--times", "0.0",
                              "--out-dir", str(tmp_path)])
    assert rc == 0
    rc = cli.main_field([os.path.join(artifacts, "field_000.txt"),
                         "--snapshot", os.path.join(artifacts, "snap_000000.txt"),
                         "--out", str(tmp_path / "f.png")])
    assert rc == 0
    assert cli.main_field([str(tmp_path / "missing.txt")]) == 1
