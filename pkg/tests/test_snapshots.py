import numpy as np
import pytest

from dropflow import dynamics as dyn, geometry as geo, snapshots, spectral as sp


def small_state():
    th = sp.uniform_params(32)
    b1 = geo.DropBoundary(np.exp(1j * th), lam=2.0)
    b2 = geo.DropBoundary(0.4 * np.exp(1j * th) + 2.2, lam=0.5)
    st = dyn.SimulationState([b1, b2], t=1.2345)
    st.stats.dt = 0.0625
    return st


def test_snapshot_round_trip_exact(tmp_path):
    st = small_state()
    path = str(tmp_path / "snap.txt")
    snapshots.write_snapshot(path, st)
    back = snapshots.read_snapshot(path)
    assert back.t == st.t
    assert back.stats.dt == st.stats.dt
    assert np.array_equal(back.areas0, st.areas0)
    for a, b in zip(st.boundaries, back.boundaries):
        assert np.array_equal(a.markers, b.markers)
        assert a.lam == b.lam
        assert a.initial_spacing == b.initial_spacing


def test_field_round_trip(tmp_path):
    pts = np.array([0.1 + 0.2j, -1.5 + 0j, 3.0 - 2.0j])
    u = np.array([1e-3 + 2e-3j, 0j, -4.5e-1 + 1e-9j])
    path = str(tmp_path / "field.txt")
    snapshots.write_field(path, pts, u, 3.25, grid_meta={"nx": 3, "ny": 1},
                          skipped=np.array([9.0 + 9.0j]))
    rp, ru, t, header = snapshots.read_field(path)
    assert t == 3.25
    assert np.array_equal(rp, pts)
    assert np.array_equal(ru, u)
    assert header["nx"] == "3"


def test_malformed_snapshot_reports_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# dropflow snapshot t=0.0 dt=0.0 drops=1\n"
                    "# drop id=0 n=32 lambda=1 spacing0=0.1 area0=3.14\n"
                    "0 0 1.0\n")
    with pytest.raises(snapshots.SnapshotError, match=":3:"):
        snapshots.read_snapshot(str(path))


def test_benchmark_record_round_trip(tmp_path):
    st = small_state()
    res = dyn.RunResult(steady=True, t_steady=4.5,
                        centers=[0.1 + 0.2j, 2.2 + 0j],
                        r_devs=[1e-4, 5e-5], area_error=3e-9, state=st)
    path = str(tmp_path / "bench.txt")
    snapshots.write_benchmark(path, res, [2.0, 0.5], name="pairtest")
    rec = snapshots.read_benchmark(path)
    assert float(rec["t_steady"]) == 4.5
    assert len(rec["drops"]) == 2
    assert abs(rec["drops"][0]["center"] - (0.1 + 0.2j)) < 1e-6
    assert rec["drops"][1]["lam"] == 0.5
