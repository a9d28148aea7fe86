"""Batch rendering of boundary frames and velocity quiver plots."""

from __future__ import annotations

import os
import warnings

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .parse import FieldGrid, Snapshot, parse_snapshot

DPI = 130


def _frame_limits(series):
    zs = np.concatenate([m for s in series for m in s.drops])
    x0, x1 = zs.real.min(), zs.real.max()
    y0, y1 = zs.imag.min(), zs.imag.max()
    pad = 0.08 * max(x1 - x0, y1 - y0)
    return (x0 - pad, x1 + pad), (y0 - pad, y1 + pad)


def render_boundary_frame(snapshot: Snapshot, path: str, xlim=None, ylim=None):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for m in snapshot.drops:
        closed = np.append(m, m[0])
        ax.plot(closed.real, closed.imag, "-", lw=1.1)
        ax.fill(closed.real, closed.imag, alpha=0.15)
    ax.set_aspect("equal")
    if xlim:
        ax.set_xlim(*xlim)
    if ylim:
        ax.set_ylim(*ylim)
    ax.set_title(f"t = {snapshot.t:.4g}")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_boundaries(series, times, out_dir: str, prefix: str = "frame"):
    """One image per requested time (nearest snapshot, with a warning when
    the match is not exact).  Returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    if not times:
        return []
    xlim, ylim = _frame_limits(series)
    ts = np.array([s.t for s in series])
    paths = []
    for i, t in enumerate(times):
        k = int(np.argmin(np.abs(ts - t)))
        if abs(ts[k] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
            warnings.warn(f"no snapshot at t={t:g}; using nearest t={ts[k]:g}",
                          stacklevel=2)
        path = os.path.join(out_dir, f"{prefix}_{i:03d}.png")
        render_boundary_frame(series[k], path, xlim, ylim)
        paths.append(path)
    return paths


def plot_field(grid: FieldGrid, path: str, snapshot: Snapshot | None = None,
               max_arrows: int = 2500):
    """Quiver plot of a velocity field file, with boundary overlay when a
    snapshot is given (or referenced in the field header)."""
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    pts, u = grid.points, grid.u
    stride = max(1, int(np.ceil(np.sqrt(pts.size / max_arrows))))
    sel = slice(None, None, stride)
    speed = np.abs(u)
    scale = 18.0 * max(speed.max(), 1e-30)
    ax.quiver(pts.real[sel], pts.imag[sel], u.real[sel], u.imag[sel],
              speed[sel], angles="xy", scale=scale, width=0.003, cmap="viridis")
    if snapshot is not None:
        for m in snapshot.drops:
            closed = np.append(m, m[0])
            ax.plot(closed.real, closed.imag, "k-", lw=1.2)
    ax.set_aspect("equal")
    ax.set_title(f"velocity field, t = {grid.t:.4g}")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_rgba(draw) -> bytes:
    """Deterministic RGBA bytes of a figure produced by draw(fig, ax)."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    draw(fig, ax)
    fig.canvas.draw()
    buf = bytes(fig.canvas.buffer_rgba())
    plt.close(fig)
    return buf


def resolve_overlay(grid: FieldGrid, field_path: str) -> Snapshot | None:
    """Boundary overlay from the snapshot referenced in the field header,
    if present next to the field file."""
    name = grid.meta.get("snapshot")
    if not name:
        return None
    cand = os.path.join(os.path.dirname(os.path.abspath(field_path)), name)
    if os.path.exists(cand):
        return parse_snapshot(cand)
    return None
