"""Parsers for the simulator's flat-text output files.

Snapshot files: '#' header lines (the first carries t=..., one per drop
carries id/n/lambda metadata), then one record per line:
    drop_id marker_index x y
Field files: a '#' header with t and grid metadata, then records:
    x y u1 u2
Both parsers report malformed records with their line numbers and can
re-serialize what they read (round-trip modulo float formatting).
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    """Malformed record; the message names the file and line number."""


def _header_fields(line: str) -> dict:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


@dataclass
class Snapshot:
    t: float
    drops: list                      # list of complex marker arrays
    meta: dict = field(default_factory=dict)

    def serialize(self) -> str:
        lines = [f"# dropflow snapshot t={self.t:.17e} "
                 f"dt={float(self.meta.get('dt', 0.0)):.17e} "
                 f"drops={len(self.drops)}"]
        for i, m in enumerate(self.drops):
            lines.append(f"# drop id={i} n={len(m)}")
        for i, m in enumerate(self.drops):
            for j, z in enumerate(m):
                lines.append(f"{i} {j} {z.real:.17e} {z.imag:.17e}")
        return "\n".join(lines) + "\n"


def parse_snapshot(path: str) -> Snapshot:
    t = 0.0
    meta = {}
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                f = _header_fields(line)
                if "t" in f:
                    t = float(f["t"])
                meta.update(f)
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected "
                                 f"'drop index x y', got {len(parts)} fields")
            try:
                di, mi = int(parts[0]), int(parts[1])
                x, y = float(parts[2]), float(parts[3])
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            rows.append((di, mi, x, y))
    if not rows:
        raise ParseError(f"{path}: no marker records")
    ndrops = max(r[0] for r in rows) + 1
    drops = []
    for i in range(ndrops):
        pts = sorted((r for r in rows if r[0] == i), key=lambda r: r[1])
        m = np.array([complex(x, y) for _, _, x, y in pts])
        if len(m) % 16:
            raise ParseError(f"{path}: drop {i} has {len(m)} markers, "
                             "not a multiple of 16")
        drops.append(m)
    return Snapshot(t=t, drops=drops, meta=meta)


@dataclass
class FieldGrid:
    t: float
    points: np.ndarray
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def serialize(self) -> str:
        meta = " ".join(f"{k}={v}" for k, v in self.meta.items()
                        if k not in ("t",))
        lines = [f"# dropflow field t={self.t:.17e} {meta}".rstrip()]
        for z, uu in zip(self.points, self.u):
            lines.append(f"{z.real:.17e} {z.imag:.17e} "
                         f"{uu.real:.17e} {uu.imag:.17e}")
        return "\n".join(lines) + "\n"


def parse_field(path: str) -> FieldGrid:
    t = 0.0
    meta = {}
    pts, us = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                f = _header_fields(line)
                if "t" in f:
                    t = float(f["t"])
                meta.update(f)
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"{path}:{lineno}: expected 'x y u1 u2', "
                                 f"got {len(parts)} fields")
            try:
                x, y, u1, u2 = map(float, parts)
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            pts.append(complex(x, y))
            us.append(complex(u1, u2))
    return FieldGrid(t=t, points=np.array(pts), u=np.array(us), meta=meta)


_SNAP_RE = re.compile(r"snap_(\d+)\.txt$")


def snapshot_series(directory: str):
    """All snapshots in a directory, ordered by time (strictly increasing)."""
    names = sorted(n for n in os.listdir(directory) if _SNAP_RE.search(n))
    if not names:
        raise ParseError(f"{directory}: no snapshot files (snap_*.txt)")
    series = [parse_snapshot(os.path.join(directory, n)) for n in names]
    series.sort(key=lambda s: s.t)
    out = [series[0]]
    for s in series[1:]:
        if s.t > out[-1].t:
            out.append(s)
    return out
