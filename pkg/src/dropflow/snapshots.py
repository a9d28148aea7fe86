"""Flat-text persistence: snapshots, diagnostics, field grids, benchmarks.

All files are line-oriented text with '#' header lines carrying time and
metadata, then one whitespace-separated record per line.  Floats print with
17 significant digits so a reload reproduces the run to machine precision.

snapshot:   drop_id marker_index x y
field grid: x y u1 u2
diag log:   t dt gmres_iters, then per drop: area cx cy r_dev
benchmark:  drop_id lambda area_err center_x center_y r_dev
"""

from __future__ import annotations

import os

import numpy as np

from . import geometry as geo
from .dynamics import SimulationState, StepStats

FMT = "%.17e"


class SnapshotError(ValueError):
    """Snapshot or field file is missing data or malformed."""


def write_snapshot(path: str, state: SimulationState) -> None:
    with open(path, "w") as fh:
        fh.write(f"# dropflow snapshot t={state.t:.17e} dt={state.stats.dt:.17e} "
                 f"drops={len(state.boundaries)}\n")
        for i, b in enumerate(state.boundaries):
            fh.write(f"# drop id={i} n={b.n} lambda={b.lam:.17e} "
                     f"spacing0={b.initial_spacing:.17e} "
                     f"area0={state.areas0[i]:.17e}\n")
        for i, b in enumerate(state.boundaries):
            for j, z in enumerate(b.markers):
                fh.write(f"{i} {j} {z.real:.17e} {z.imag:.17e}\n")


def _header_fields(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def read_snapshot(path: str) -> SimulationState:
    """Rebuild a SimulationState from a snapshot file (restartable)."""
    t = 0.0
    dt = 0.0
    meta = {}
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                f = _header_fields(line)
                if "t" in f:
                    t = float(f["t"])
                    dt = float(f.get("dt", 0.0))
                if f.get("id") is not None:
                    meta[int(f["id"])] = f
                continue
            parts = line.split()
            if len(parts) != 4:
                raise SnapshotError(f"{path}:{lineno}: expected 4 fields, "
                                    f"got {len(parts)}")
            rows.append((int(parts[0]), int(parts[1]),
                         float(parts[2]), float(parts[3])))
    if not rows:
        raise SnapshotError(f"{path}: no marker records")
    ndrops = max(r[0] for r in rows) + 1
    boundaries = []
    areas0 = []
    for i in range(ndrops):
        pts = sorted((r for r in rows if r[0] == i), key=lambda r: r[1])
        markers = np.array([complex(x, y) for _, _, x, y in pts])
        if i not in meta:
            raise SnapshotError(f"{path}: missing header for drop {i}")
        b = geo.DropBoundary(markers, lam=float(meta[i]["lambda"]),
                             initial_spacing=float(meta[i]["spacing0"]))
        boundaries.append(b)
        areas0.append(float(meta[i]["area0"]))
    state = SimulationState(boundaries, t=t, areas0=np.array(areas0),
                            stats=StepStats(dt=dt))
    return state


def write_field(path: str, points: np.ndarray, u: np.ndarray, t: float,
                grid_meta: dict | None = None, skipped=None,
                snapshot_name: str | None = None) -> None:
    with open(path, "w") as fh:
        meta = " ".join(f"{k}={v}" for k, v in (grid_meta or {}).items())
        snap = f" snapshot={snapshot_name}" if snapshot_name else ""
        fh.write(f"# dropflow field t={t:.17e} {meta}{snap}\n")
        for z in (skipped if skipped is not None else []):
            fh.write(f"# skipped {z.real:.17e} {z.imag:.17e} on-boundary\n")
        for z, uu in zip(points, u):
            fh.write(f"{z.real:.17e} {z.imag:.17e} {uu.real:.17e} {uu.imag:.17e}\n")


def read_field(path: str):
    """Parse a field file: (points, u, t, header dict)."""
    t = 0.0
    header = {}
    pts, us = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                f = _header_fields(line)
                if "t" in f:
                    t = float(f["t"])
                header.update(f)
                continue
            parts = line.split()
            if len(parts) != 4:
                raise SnapshotError(f"{path}:{lineno}: expected 4 fields, "
                                    f"got {len(parts)}")
            x, y, u1, u2 = map(float, parts)
            pts.append(complex(x, y))
            us.append(complex(u1, u2))
    return np.array(pts), np.array(us), t, header


class DiagnosticsLog:
    """Appends one row per accepted step: time, step, solver and per-drop
    shape diagnostics."""

    def __init__(self, path: str, ndrops: int):
        self.fh = open(path, "w")
        cols = "t dt gmres_iters"
        for i in range(ndrops):
            cols += f" area{i} cx{i} cy{i} rdev{i}"
        self.fh.write(f"# dropflow diagnostics columns: {cols}\n")

    def append(self, state: SimulationState, used_dt: float) -> None:
        row = [f"{state.t:.17e}", f"{used_dt:.17e}", str(state.stats.gmres_iters)]
        for d in state.diagnostics():
            row += [f"{d.area:.17e}", f"{d.centroid.real:.17e}",
                    f"{d.centroid.imag:.17e}", f"{d.r_dev:.17e}"]
        self.fh.write(" ".join(row) + "\n")

    def close(self) -> None:
        self.fh.close()


def write_benchmark(path: str, result, lambdas, name: str = "scene",
                    time_scale: float | None = None) -> None:
    """Benchmark record at steady state: centers, times, area errors."""
    with open(path, "w") as fh:
        fh.write(f"# dropflow benchmark scene={name} steady={result.steady}\n")
        ts = "nan" if result.t_steady is None else f"{result.t_steady:.6g}"
        fh.write(f"# t_steady={ts} area_err={result.area_error:.6e}\n")
        if time_scale is not None:
            fh.write(f"# time_scale={time_scale:.17e}\n")
        fh.write("# columns: drop lambda area_err center_x center_y r_dev\n")
        for i, (c, r, lam) in enumerate(zip(result.centers, result.r_devs, lambdas)):
            fh.write(f"{i} {lam:.6g} {result.area_error:.6e} "
                     f"{c.real:.7f} {c.imag:.7f} {r:.3e}\n")


def read_benchmark(path: str) -> dict:
    out = {"drops": []}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                out.update(_header_fields(line))
            elif line:
                i, lam, aerr, cx, cy, r = line.split()
                out["drops"].append(dict(drop=int(i), lam=float(lam),
                                         area_err=float(aerr),
                                         center=complex(float(cx), float(cy)),
                                         r_dev=float(r)))
    return out


def snapshot_path(out_dir: str, index: int) -> str:
    return os.path.join(out_dir, f"snap_{index:06d}.txt")
