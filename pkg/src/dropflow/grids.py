"""Two-grid machinery: equispaced markers vs composite Gauss-Legendre panels.

Time stepping and the tangential-velocity correction live on the equispaced
(trapezoidal) grid; the integral equation and velocity quadratures live on a
composite grid of 16-point Gauss-Legendre panels tiling the parameter circle.
Conversion equispaced -> panels evaluates the trigonometric interpolant at the
panel nodes (exact mode folding, O(N log N)); panels -> equispaced uses
barycentric Lagrange interpolation of degree 15 per panel, which lines up
because point counts are kept multiples of 16.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .geometry import DropBoundary

PANEL_SIZE = sp.PANEL_SIZE


@dataclass
class PanelGrid:
    """Composite 16-point Gauss-Legendre discretization of all interfaces.

    Arrays are flat over all nodes (panel-major); panels tile [0, 2pi) in
    equal parameter intervals per drop.
    """

    tau: np.ndarray            # node positions, complex (M,)
    dtau: np.ndarray           # dz/ds at nodes, complex (M,)
    ddtau: np.ndarray          # d2z/ds2 at nodes, complex (M,)
    weights: np.ndarray        # GL weights scaled to parameter, float (M,)
    panel_drop: np.ndarray     # owning drop index, int (P,)
    panel_z: np.ndarray        # plane positions of panel endpoints, complex (P, 2)
    panel_arclen: np.ndarray   # panel arclengths, float (P,)
    node_drop: np.ndarray      # owning drop index per node, int (M,)
    drop_offsets: np.ndarray   # node offset of each drop, int (ndrops+1,)
    lambdas: np.ndarray        # viscosity ratio per drop, float (ndrops,)

    @property
    def n_nodes(self) -> int:
        return self.tau.shape[0]

    @property
    def n_panels(self) -> int:
        return self.panel_drop.shape[0]

    @property
    def n_drops(self) -> int:
        return self.lambdas.shape[0]

    def drop_slice(self, d: int) -> slice:
        return slice(self.drop_offsets[d], self.drop_offsets[d + 1])

    def panel_slice(self, p: int) -> slice:
        return slice(p * PANEL_SIZE, (p + 1) * PANEL_SIZE)

    def panel_midpoint(self, p: int) -> complex:
        return 0.5 * (self.panel_z[p, 0] + self.panel_z[p, 1])

    def arclength(self, d: int) -> float:
        mask = self.panel_drop == d
        return float(np.sum(self.panel_arclen[mask]))


def to_panel_grid(boundary: DropBoundary) -> PanelGrid:
    """Panel grid for a single (already point-doubled) boundary."""
    return build_panel_grid([boundary])


def build_panel_grid(boundaries: list[DropBoundary]) -> PanelGrid:
    """Assemble the composite panel grid for a list of doubled boundaries.

    Node values and parameter derivatives come from exact evaluation of each
    boundary's trigonometric interpolant at the Gauss-Legendre parameter
    points.
    """
    taus, dtaus, ddtaus, wts = [], [], [], []
    pdrop, pz, plen, ndrop = [], [], [], []
    offsets = [0]
    glw = sp.gauss_legendre_weights()
    for d, b in enumerate(boundaries):
        m = b.markers
        n = m.shape[0]
        if n % PANEL_SIZE:
            raise ValueError("marker count must be a multiple of 16")
        npan = n // PANEL_SIZE
        t0, t1, t2 = sp.panel_gl_eval(m, npan, orders=(0, 1, 2))
        h = 2.0 * np.pi / npan
        w = np.tile(glw * h / 2.0, npan)
        edges = sp.trig_eval(m, 2.0 * np.pi * np.arange(npan) / npan)
        speeds = (np.abs(t1) * w).reshape(npan, PANEL_SIZE).sum(axis=1)
        taus.append(t0)
        dtaus.append(t1)
        ddtaus.append(t2)
        wts.append(w)
        pdrop.append(np.full(npan, d))
        pz.append(np.stack([edges, np.roll(edges, -1)], axis=1))
        plen.append(speeds)
        ndrop.append(np.full(n, d))
        offsets.append(offsets[-1] + n)
    return PanelGrid(
        tau=np.concatenate(taus),
        dtau=np.concatenate(dtaus),
        ddtau=np.concatenate(ddtaus),
        weights=np.concatenate(wts),
        panel_drop=np.concatenate(pdrop),
        panel_z=np.concatenate(pz),
        panel_arclen=np.concatenate(plen),
        node_drop=np.concatenate(ndrop),
        drop_offsets=np.array(offsets),
        lambdas=np.array([b.lam for b in boundaries], dtype=float),
    )


def to_equispaced(values: np.ndarray, grid: PanelGrid, drop: int) -> np.ndarray:
    """Interpolate node values of one drop back to its equispaced points.

    Per-panel degree-15 barycentric interpolation; every panel holds exactly
    16 equispaced parameter points at fixed local offsets, so a single 16x16
    matrix applies to all panels.
    """
    sl = grid.drop_slice(drop)
    vals = values[sl].reshape(-1, PANEL_SIZE)
    L = sp.panel_to_equispaced_matrix()
    return (vals @ L.T).reshape(-1)


def node_parameter_derivative(values: np.ndarray, grid: PanelGrid) -> np.ndarray:
    """d/ds of a smooth per-panel quantity sampled at all panel nodes.

    Differentiates the degree-15 interpolant panel by panel and rescales
    from the reference interval to the drop's parameter.
    """
    D = sp.panel_differentiation_matrix()
    out = np.empty_like(values, dtype=complex)
    for d in range(grid.n_drops):
        sl = grid.drop_slice(d)
        npan = (sl.stop - sl.start) // PANEL_SIZE
        h = 2.0 * np.pi / npan
        v = values[sl].reshape(npan, PANEL_SIZE)
        out[sl] = (v @ D.T).reshape(-1) * (2.0 / h)
    return out
