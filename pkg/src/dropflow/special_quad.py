"""Corrected quadrature for near-singular panel integrals.

Standard 16-point Gauss-Legendre quadrature on a panel loses accuracy when
the evaluation point sits within about a panel length of it: the Cauchy-type
kernels become near-singular.  The fix used here is interpolatory: map the
panel so its endpoints land on -1 and 1, expand the smooth factor of the
integrand in monomials, and integrate each monomial against the kernel
analytically with the forward recursions

    p_k = integral of t^k/(t - z0) dt over [-1, 1],
    q_k = integral of t^k/(t - z0)**2 dt over [-1, 1],

adding the residue 2*pi*i to p_0 when z0 lies between the mapped panel and
the real axis (the recursions then propagate the correction to all orders).
Solving a transposed Vandermonde system once per target-panel pair turns the
corrected integrals into plain 16-point weighted sums, so the corrections
splice directly into matrix rows and velocity sums.

A plan lists every target-panel pair that activates the correction (distance
gate plus a p_0 discrepancy check) together with its precomputed weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .grids import PanelGrid, PANEL_SIZE

SQ_TOL = 1e-13
COINCIDENT_TOL = 1e-14
TWO_PI_I = 2j * np.pi

# On-surface targets this many panels or closer (along their own drop) keep
# the global Nystrom rule.  A resolved curve cannot come back within a panel
# length of itself over so short an arc, so pairs here only ever flag local
# under-resolution, where the interpolatory correction is no better than the
# rule it would replace.
SAME_DROP_EXCLUSION_RING = 3

# Targets outside the Bernstein ellipse of this radius (around the mapped
# panel [-1, 1]) never activate: the 16-point Gauss-Legendre error decays
# like rho**-32, which is below the p_0 discrepancy tolerance out there for
# any integrand the degree-15 correction could itself represent.  A
# discrepancy beyond the cap therefore only flags an under-resolved panel,
# where switching to the correction would trade one bad value for another
# (and a discontinuous one along the trajectory, which breaks the adaptive
# time stepper).
RHO_ACTIVATION_CAP = 3.3


def bernstein_radius(z0: np.ndarray) -> np.ndarray:
    """Elliptical distance of z0 from [-1, 1]: |z0 + sqrt(z0^2 - 1)| >= 1."""
    z0 = np.asarray(z0, dtype=complex)
    s = np.sqrt(z0 * z0 - 1.0)
    return np.maximum(np.abs(z0 + s), np.abs(z0 - s))


class OnPanelTarget(ValueError):
    """Target is numerically on the panel; the caller should be using
    on-surface (diagonal limit) handling instead."""


# Above this radius the forward recursions amplify roundoff as |z0|**k;
# the geometric series of the defining integrals converges there instead.
SERIES_RADIUS = 1.1
_SERIES_TERMS = 420


def _pq_series(z0: np.ndarray, residue_sign: np.ndarray):
    """p_k, q_k summed termwise (stable for |z0| > SERIES_RADIUS)."""
    K = z0.shape[0]
    ms = np.arange(_SERIES_TERMS)
    p = np.empty((K, PANEL_SIZE), dtype=complex)
    q = np.empty((K, PANEL_SIZE), dtype=complex)
    zinv = 1.0 / z0
    for k in range(PANEL_SIZE):
        n = k + ms
        c = np.where(n % 2 == 0, 2.0 / (n + 1.0), 0.0)
        pw = zinv[:, None] ** (ms[None, :] + 1)
        p[:, k] = -(pw * c[None, :]).sum(axis=1)
        q[:, k] = ((ms[None, :] + 1) * pw * zinv[:, None] * c[None, :]).sum(axis=1)
    p += residue_sign[:, None] * TWO_PI_I * z0[:, None] ** np.arange(PANEL_SIZE)[None, :]
    ks = np.arange(PANEL_SIZE)
    q[:, 1:] += residue_sign[:, None] * TWO_PI_I \
        * ks[None, 1:] * z0[:, None] ** (ks[None, 1:] - 1)
    return p, q


def compute_pq(z0: complex, residue_sign: int = 0):
    """Kernel moment values p_k, q_k (k = 0..15) at transformed target z0.

    `residue_sign` is +1/-1 when the contour deformation from the panel to
    [-1, 1] wraps the pole, 0 otherwise; only p_0 needs the explicit term,
    the recursions carry it upward consistently.  Beyond SERIES_RADIUS the
    values come from the convergent geometric series instead (the forward
    recursions lose digits as |z0|**k out there).
    """
    z0 = complex(z0)
    if abs(z0.imag) < COINCIDENT_TOL and abs(z0.real) <= 1.0 + COINCIDENT_TOL:
        raise OnPanelTarget(f"target z0={z0} is on the reference segment")
    if abs(z0) > SERIES_RADIUS:
        p, q = _pq_series(np.array([z0]), np.array([residue_sign]))
        return p[0], q[0]
    p = np.empty(PANEL_SIZE, dtype=complex)
    q = np.empty(PANEL_SIZE, dtype=complex)
    p[0] = np.log(1.0 - z0) - np.log(-1.0 - z0) + residue_sign * TWO_PI_I
    q[0] = -1.0 / (1.0 + z0) - 1.0 / (1.0 - z0)
    for k in range(1, PANEL_SIZE):
        p[k] = z0 * p[k - 1] + (1.0 - (-1.0) ** k) / k
        q[k] = z0 * q[k - 1] + p[k - 1]
    return p, q


def _compute_pq_batch(z0: np.ndarray, residue_sign: np.ndarray):
    """Vectorized compute_pq over many targets."""
    K = z0.shape[0]
    p = np.empty((K, PANEL_SIZE), dtype=complex)
    q = np.empty((K, PANEL_SIZE), dtype=complex)
    far = np.abs(z0) > SERIES_RADIUS
    if np.any(far):
        p[far], q[far] = _pq_series(z0[far], residue_sign[far])
    near = ~far
    if np.any(near):
        zn = z0[near]
        pn = np.empty((zn.shape[0], PANEL_SIZE), dtype=complex)
        qn = np.empty_like(pn)
        pn[:, 0] = np.log(1.0 - zn) - np.log(-1.0 - zn) + residue_sign[near] * TWO_PI_I
        qn[:, 0] = -1.0 / (1.0 + zn) - 1.0 / (1.0 - zn)
        for k in range(1, PANEL_SIZE):
            pn[:, k] = zn * pn[:, k - 1] + (1.0 - (-1.0) ** k) / k
            qn[:, k] = zn * qn[:, k - 1] + pn[:, k - 1]
        p[near], q[near] = pn, qn
    return p, q


def _vandermonde_weights_batch(X: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Batched transposed-Vandermonde solve: sum_j r_j X[i,j]^k = B[i,k]."""
    R = np.array(B, dtype=complex)
    n = X.shape[1]
    for k in range(n - 1):
        R[:, k + 1:n] -= X[:, [k]] * R[:, k:n - 1].copy()
    for k in range(n - 2, -1, -1):
        d = X[:, k + 1:n] - X[:, :n - k - 1]
        R[:, k + 1:n] /= d
        R[:, k:n - 1] -= R[:, k + 1:n]
    return R


def monomial_coefficients(tnodes: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Coefficients c_k with sum_k c_k t^k = f at the 16 transformed nodes."""
    return sp.vandermonde_coefficients(np.asarray(tnodes, dtype=complex),
                                       np.asarray(f, dtype=complex))


def panel_frame(grid: PanelGrid, p: int):
    """Midpoint, scale alpha = (z2 - z1)/2 and transformed nodes of panel p."""
    z1, z2 = grid.panel_z[p]
    mid = 0.5 * (z1 + z2)
    alpha = 0.5 * (z2 - z1)
    tn = (grid.tau[grid.panel_slice(p)] - mid) / alpha
    return mid, alpha, tn


def residue_sign_for(z0: complex, tnodes: np.ndarray) -> int:
    """Residue sign for a mapped target against a mapped panel.

    The panel is a curve from -1 to 1; the pole correction applies when the
    target lies in the pocket between the curve and the real segment.  The
    curve height above Re(z0) comes from the degree-15 interpolant of the
    node imaginary parts as a function of the node real parts.
    """
    x, y = z0.real, z0.imag
    if abs(x) > 1.0 or y == 0.0:
        return 0
    yc = _curve_height(tnodes, np.array([x]))[0]
    if np.sign(yc) == np.sign(y) and abs(y) < abs(yc):
        return -int(np.sign(y))
    return 0


def _curve_height(tnodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Im of the mapped panel over given Re values (barycentric, deg 15)."""
    xs = np.real(tnodes)
    w = sp.barycentric_weights(xs)
    num = np.zeros_like(x)
    den = np.zeros_like(x)
    hit = np.full(x.shape, -1)
    d = x[:, None] - xs[None, :]
    exact = d == 0.0
    t = np.where(exact, 0.0, w[None, :] / np.where(exact, 1.0, d))
    num = t @ np.imag(tnodes)
    den = np.sum(t, axis=1)
    out = num / den
    rows, cols = np.nonzero(exact)
    out[rows] = np.imag(tnodes)[cols]
    return out


def needs_special(z: complex, grid: PanelGrid, p: int, tol: float = SQ_TOL) -> bool:
    """Activation test for one target-panel pair.

    True when the target is within one panel arclength of the panel midpoint
    and plain Gauss-Legendre quadrature of 1/(tau - z) misses the analytic
    value of p_0 by more than `tol`.
    """
    mid_plane = grid.panel_midpoint(p)
    if abs(z - mid_plane) >= grid.panel_arclen[p]:
        return False
    mid, alpha, tn = panel_frame(grid, p)
    z0 = (z - mid) / alpha
    if bernstein_radius(z0) > RHO_ACTIVATION_CAP:
        return False
    sl = grid.panel_slice(p)
    p0_gauss = np.sum(grid.weights[sl] * grid.dtau[sl] / (grid.tau[sl] - z))
    sign = residue_sign_for(z0, tn)
    p0_true = np.log(1.0 - z0) - np.log(-1.0 - z0) + sign * TWO_PI_I
    return bool(abs(p0_true - p0_gauss) > tol)


@dataclass
class SpecialQuadPlan:
    """Near-singular target-panel pairs with precomputed correction weights.

    wP turns 16 panel values of f into int f(tau)/(tau-z) dtau; wQ (after
    the 1/alpha scale) does the same for the squared kernel.  Both are in
    untransformed coordinates, so they replace the panel's contribution to
    any of the kernel sums directly.
    """

    target_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    target_z: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    panel: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    z0: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    alpha: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    residue_sign: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    wP: np.ndarray = field(default_factory=lambda: np.empty((0, PANEL_SIZE), dtype=complex))
    wQ: np.ndarray = field(default_factory=lambda: np.empty((0, PANEL_SIZE), dtype=complex))
    # target indices found to lie on a panel (populated with on_panel="skip")
    on_panel_targets: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def n_pairs(self) -> int:
        return self.panel.shape[0]

    def m2_weights(self, grid: PanelGrid) -> np.ndarray:
        """Per-pair 16-node weights replacing the M2 kernel row segment.

        Acts on conj(omega): the pair's corrected value is
        sum_j m2w[j] * conj(omega_j).
        """
        cols = (self.panel[:, None] * PANEL_SIZE
                + np.arange(PANEL_SIZE)[None, :])
        tau = grid.tau[cols]
        that = grid.dtau[cols] / np.abs(grid.dtau[cols])
        dz = tau - self.target_z[:, None]
        return (np.conj(self.wP) * that ** 2
                - np.conj(self.wQ) * dz / np.conj(self.alpha)[:, None]) / 2j

    def node_columns(self) -> np.ndarray:
        return (self.panel[:, None] * PANEL_SIZE
                + np.arange(PANEL_SIZE)[None, :])


def corrected_integrals(grid: PanelGrid, p: int, z: complex, f: np.ndarray):
    """(I1, I2) = (int f/(tau-z) dtau, int f/(tau-z)^2 dtau) over panel p.

    Both values are in untransformed coordinates (the second integral is not
    scale invariant; the 1/alpha factor is applied here).
    """
    mid, alpha, tn = panel_frame(grid, p)
    z0 = (z - mid) / alpha
    sign = residue_sign_for(z0, tn)
    pk, qk = compute_pq(z0, sign)
    wp = sp.vandermonde_weights(tn, pk)
    wq = sp.vandermonde_weights(tn, qk)
    f = np.asarray(f, dtype=complex)
    return complex(np.sum(wp * f)), complex(np.sum(wq * f) / alpha)


def corrected_kernels(grid: PanelGrid, p: int, z: complex, omega: np.ndarray):
    """Corrected panel contributions to the three boundary-integral kernels.

    Returns (a, b, c) approximating, over panel p,
      a = int omega * Im{dtau/(tau-z)},
      b = int conj(omega) * Im{dtau (conj(tau)-conj(z))} / (conj(tau)-conj(z))^2,
      c = int omega * Re{dtau/(tau-z)}.
    """
    mid, alpha, tn = panel_frame(grid, p)
    z0 = (z - mid) / alpha
    sign = residue_sign_for(z0, tn)
    pk, qk = compute_pq(z0, sign)
    wp = sp.vandermonde_weights(tn, pk)
    wq = sp.vandermonde_weights(tn, qk)
    omega = np.asarray(omega, dtype=complex)
    sl = grid.panel_slice(p)
    that = grid.dtau[sl] / np.abs(grid.dtau[sl])
    a = complex(np.sum(np.imag(wp) * omega))
    c = complex(np.sum(np.real(wp) * omega))
    A1 = np.sum(wp * np.conj(that) ** 2 * omega)
    A2 = np.sum(wq * (np.conj(grid.tau[sl]) - np.conj(z)) * omega) / alpha
    b = complex((np.conj(A1) - np.conj(A2)) / 2j)
    return a, b, c


def _bin_targets(targets: np.ndarray, cell: float):
    """Uniform spatial hash of target points."""
    ix = np.floor(targets.real / cell).astype(np.int64)
    iy = np.floor(targets.imag / cell).astype(np.int64)
    bins: dict[tuple[int, int], list[int]] = {}
    for i, key in enumerate(zip(ix.tolist(), iy.tolist())):
        bins.setdefault(key, []).append(i)
    return bins


def build_plan(grid: PanelGrid, targets: np.ndarray,
               target_nodes: bool = False, tol: float = SQ_TOL,
               on_panel: str = "raise") -> SpecialQuadPlan:
    """Find all near-singular target-panel pairs and precompute weights.

    `target_nodes=True` marks the targets as the grid's own nodes (in node
    order): a node is then never paired with its own panel or panels within
    SAME_DROP_EXCLUSION_RING positions along the same drop, where the
    on-surface Nystrom rule with diagonal limits already applies.  Uniform
    spatial binning keeps the pair search near O(targets + panels).

    A target numerically on a panel raises OnPanelTarget; with
    on_panel="skip" it is instead left out of the pair list and recorded in
    the plan's on_panel_targets (field evaluation drops such grid points).
    """
    targets = np.asarray(targets, dtype=complex)
    if targets.size == 0 or grid.n_panels == 0:
        return SpecialQuadPlan()
    bad_targets: set[int] = set()
    cell = float(np.max(grid.panel_arclen))
    bins = _bin_targets(targets, cell)

    drop_panel_start = {}
    for p in range(grid.n_panels):
        d = int(grid.panel_drop[p])
        drop_panel_start.setdefault(d, p)
    drop_panel_count = {d: int(np.sum(grid.panel_drop == d))
                        for d in range(grid.n_drops)}

    t_idx, t_z, t_panel = [], [], []
    t_z0, t_alpha, t_sign = [], [], []
    for p in range(grid.n_panels):
        mid_plane = grid.panel_midpoint(p)
        radius = grid.panel_arclen[p]
        i0 = int(np.floor((mid_plane.real - radius) / cell))
        i1 = int(np.floor((mid_plane.real + radius) / cell))
        j0 = int(np.floor((mid_plane.imag - radius) / cell))
        j1 = int(np.floor((mid_plane.imag + radius) / cell))
        cand: list[int] = []
        for ii in range(i0, i1 + 1):
            for jj in range(j0, j1 + 1):
                cand.extend(bins.get((ii, jj), ()))
        if not cand:
            continue
        cand = np.asarray(cand)
        zc = targets[cand]
        near = np.abs(zc - mid_plane) < radius
        cand, zc = cand[near], zc[near]
        if cand.size == 0:
            continue
        if target_nodes:
            d = int(grid.panel_drop[p])
            own = grid.node_drop[cand] == d
            if np.any(own):
                start = drop_panel_start[d]
                count = drop_panel_count[d]
                tpan = cand // PANEL_SIZE
                rel = np.abs((tpan - p) % count)
                ring = np.minimum(rel, count - rel)
                keep = ~(own & (ring <= SAME_DROP_EXCLUSION_RING))
                cand, zc = cand[keep], zc[keep]
        if cand.size == 0:
            continue
        mid, alpha, tn = panel_frame(grid, p)
        z0 = (zc - mid) / alpha
        close = bernstein_radius(z0) <= RHO_ACTIVATION_CAP
        cand, zc, z0 = cand[close], zc[close], z0[close]
        if cand.size == 0:
            continue
        dist_seg = np.abs(z0.imag)
        on_seg = (dist_seg < COINCIDENT_TOL) & (np.abs(z0.real) <= 1 + COINCIDENT_TOL)
        on_node = np.any(np.abs(zc[:, None] - grid.tau[grid.panel_slice(p)][None, :])
                         < COINCIDENT_TOL, axis=1)
        coincident = on_seg | on_node
        if np.any(coincident):
            if on_panel != "skip":
                raise OnPanelTarget(
                    f"a target coincides with panel {p} to within {COINCIDENT_TOL:g}")
            bad_targets.update(cand[coincident].tolist())
            cand, zc, z0 = cand[~coincident], zc[~coincident], z0[~coincident]
            if cand.size == 0:
                continue
        # Residue region: pocket between the mapped curve and the real axis.
        sign = np.zeros(cand.size, dtype=int)
        strip = (np.abs(z0.real) <= 1.0) & (z0.imag != 0.0)
        if np.any(strip):
            yc = _curve_height(tn, z0.real[strip])
            ys = z0.imag[strip]
            inside = (np.sign(yc) == np.sign(ys)) & (np.abs(ys) < np.abs(yc))
            sgn = np.where(inside, -np.sign(ys).astype(int), 0)
            sign[strip] = sgn
        p0_true = np.log(1.0 - z0) - np.log(-1.0 - z0) + sign * TWO_PI_I
        sl = grid.panel_slice(p)
        p0_gauss = np.sum(
            grid.weights[sl] * grid.dtau[sl]
            / (grid.tau[sl][None, :] - zc[:, None]), axis=1)
        act = np.abs(p0_true - p0_gauss) > tol
        if not np.any(act):
            continue
        t_idx.extend(cand[act].tolist())
        t_z.extend(zc[act].tolist())
        t_panel.extend([p] * int(np.sum(act)))
        t_z0.extend(z0[act].tolist())
        t_alpha.extend([alpha] * int(np.sum(act)))
        t_sign.extend(sign[act].tolist())

    bad = np.array(sorted(bad_targets), dtype=int)
    if not t_panel:
        return SpecialQuadPlan(on_panel_targets=bad)
    z0 = np.asarray(t_z0)
    signs = np.asarray(t_sign)
    P, Q = _compute_pq_batch(z0, signs)
    panels = np.asarray(t_panel)
    cols = panels[:, None] * PANEL_SIZE + np.arange(PANEL_SIZE)[None, :]
    alphas = np.asarray(t_alpha)
    mids = 0.5 * (grid.panel_z[panels, 0] + grid.panel_z[panels, 1])
    TN = (grid.tau[cols] - mids[:, None]) / alphas[:, None]
    wP = _vandermonde_weights_batch(TN, P)
    wQ = _vandermonde_weights_batch(TN, Q)
    return SpecialQuadPlan(
        target_idx=np.asarray(t_idx),
        target_z=np.asarray(t_z),
        panel=panels,
        z0=z0,
        alpha=alphas,
        residue_sign=signs,
        wP=wP,
        wQ=wQ,
        on_panel_targets=bad,
    )
