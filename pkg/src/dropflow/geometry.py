"""Closed drop interfaces: spectral representation and arclength equalization.

A drop boundary is stored as N marker points, equispaced in arclength, on a
smooth closed curve traversed counterclockwise.  N is kept a multiple of 16
so the composite quadrature panels built downstream align with the markers.
All derivative, area and resampling operations act on the trigonometric
interpolant of the markers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp

NEWTON_MAX_ITER = 30
NEWTON_TOL = 1e-13


class NewtonError(RuntimeError):
    """Arclength equalization failed to converge (degenerate or
    under-resolved curve)."""


@dataclass
class DropBoundary:
    """One closed interface: markers (complex, CCW), viscosity ratio and the
    arclength spacing captured at creation time (used by point-count
    adaptivity)."""

    markers: np.ndarray
    lam: float = 1.0
    initial_spacing: float | None = None

    def __post_init__(self):
        self.markers = np.asarray(self.markers, dtype=complex)
        n = self.markers.shape[0]
        if n % 16 or n < 32:
            raise ValueError(f"marker count {n} must be a multiple of 16 and >= 32")
        if self.lam <= 0:
            raise ValueError("viscosity ratio must be positive")
        if signed_area(self.markers) < 0:
            self.markers = np.roll(self.markers[::-1], 1)
        if self.initial_spacing is None:
            self.initial_spacing = arclength(self.markers) / n

    @property
    def n(self) -> int:
        return self.markers.shape[0]


def signed_area(markers: np.ndarray) -> float:
    """(1/2) Im contour-integral of conj(z) dz by the trapezoidal rule;
    positive for counterclockwise orientation."""
    zp = sp.spectral_derivative(markers)
    n = markers.shape[0]
    return 0.5 * float(np.imag(np.sum(np.conj(markers) * zp))) * 2.0 * np.pi / n


def arclength(markers: np.ndarray) -> float:
    zp = sp.spectral_derivative(markers)
    n = markers.shape[0]
    return float(np.sum(np.abs(zp))) * 2.0 * np.pi / n


def spacing_deviation(markers: np.ndarray) -> float:
    """Max relative deviation of neighbor arclength gaps from their mean.

    Each gap is estimated as the circular arc through three consecutive
    markers (exact for circles, O(h^5) otherwise), which removes the
    curvature bias that raw chord lengths carry.
    """
    z = markers
    zl = np.roll(z, 1)
    zr = np.roll(z, -1)
    chord = np.abs(zr - z)
    # Curvature of the circle through (z_{j-1}, z_j, z_{j+1}).
    a, b = z - zl, zr - z
    cross = np.imag(np.conj(a) * b)
    kappa = 2.0 * cross / (np.abs(a) * np.abs(b) * np.abs(zr - zl))
    half = 0.5 * chord * np.abs(kappa)
    arc = np.where(half < 1.0, chord * _asinc(half), chord)
    mean = np.mean(arc)
    return float(np.max(np.abs(arc - mean)) / mean)


def _asinc(x):
    """arcsin(x)/x, stable near zero."""
    out = np.ones_like(x)
    nz = x > 1e-8
    out[nz] = np.arcsin(x[nz]) / x[nz]
    return out


def spectral_derivatives(boundary: DropBoundary) -> tuple[np.ndarray, np.ndarray]:
    """First and second parameter derivatives of the interface at the markers."""
    tail = sp.fourier_tail_fraction(boundary.markers)
    if tail > 1e-10:
        warnings.warn(
            f"boundary spectrum tail carries {tail:.2e} of the energy; "
            "curve may be under-resolved", stacklevel=2)
    z1 = sp.spectral_derivative(boundary.markers, 1)
    z2 = sp.spectral_derivative(boundary.markers, 2)
    return z1, z2


def resample(boundary: DropBoundary, m: int) -> DropBoundary:
    """Spectrally pad (m > N) or truncate (m < N) the marker set."""
    if m % 16:
        raise ValueError("target count must be a multiple of 16")
    new = sp.resample_periodic(boundary.markers, m)
    return DropBoundary(new, lam=boundary.lam,
                        initial_spacing=boundary.initial_spacing)


def geometric_diagnostics(boundary: DropBoundary):
    """Area, centroid, per-marker curvature and radial circle deviation.

    Area and centroid come from contour integrals of the trigonometric
    interpolant (trapezoidal rule, spectrally accurate); r_dev is the max
    relative deviation of marker radii about the centroid, the steady-state
    (circular drop) criterion.
    """
    z = boundary.markers
    n = z.shape[0]
    z1 = sp.spectral_derivative(z, 1)
    z2 = sp.spectral_derivative(z, 2)
    h = 2.0 * np.pi / n
    area = 0.5 * float(np.imag(np.sum(np.conj(z) * z1))) * h
    if area <= 0:
        raise ValueError("non-positive enclosed area: bad orientation or "
                         "self-intersecting interface")
    centroid = complex(np.sum(z * np.conj(z) * z1)) * h / (2j * area)
    curvature = np.imag(np.conj(z1) * z2) / np.abs(z1) ** 3
    rad = np.abs(z - centroid)
    r_dev = float(np.max(np.abs(1.0 - rad / np.mean(rad))))
    return area, centroid, curvature, r_dev


def _fine_sample_count(curve, n: int) -> int:
    return max(4 * n, 2048)


def equalize_arclength(curve, n: int, lam: float = 1.0,
                       max_iter: int = NEWTON_MAX_ITER,
                       tol: float = NEWTON_TOL) -> DropBoundary:
    """Place n markers on a smooth closed curve, equispaced in arclength.

    `curve` maps s in [0, 2pi) to complex plane points (vectorized).  The
    cumulative arclength A(s) is built spectrally from a fine sampling of
    |z'|; the markers solve A(s_j) = j*L/n with s_0 = 0 by damped Newton
    iteration on each parameter value.
    """
    if n % 16 or n < 32:
        raise ValueError(f"marker count {n} must be a multiple of 16 and >= 32")
    nf = _fine_sample_count(curve, n)
    sf = sp.uniform_params(nf)
    zf = np.asarray(curve(sf), dtype=complex)
    speed_f = np.abs(sp.spectral_derivative(zf))
    if np.min(speed_f) <= 1e-10 * np.max(speed_f):
        raise NewtonError("curve parametrization has a (near-)stationary point")
    # Spectral coefficients of |z'| drive A(s) and A'(s) at arbitrary s; only
    # modes above the noise floor are kept (|z'| of an analytic curve decays
    # geometrically).
    c = np.fft.fft(speed_f) / nf
    k = sp.fourier_modes(nf)
    c[nf // 2] = 0.0
    total = 2.0 * np.pi * float(np.real(c[0]))
    # |z'| of an analytic curve decays geometrically; drop the FFT noise floor.
    keep = np.abs(c) > 1e-15 * np.max(np.abs(c))
    keep[0] = True
    ck, kk = c[keep], k[keep]
    anti = np.where(kk != 0, ck / np.where(kk != 0, 1j * kk, 1.0), 0.0)
    anti0 = np.real(np.sum(anti))
    mean_speed = np.real(c[0])

    def arc_and_speed(svals):
        speed = np.empty_like(svals)
        A = np.empty_like(svals)
        for lo in range(0, svals.shape[0], 1024):
            E = np.exp(1j * np.outer(svals[lo:lo + 1024], kk))
            speed[lo:lo + 1024] = np.real(E @ ck)
            A[lo:lo + 1024] = np.real(E @ anti)
        return A - anti0 + mean_speed * svals, speed

    # Initial guess: invert the cumulative arclength on the fine grid.
    Af = np.concatenate([sp.periodic_antiderivative(speed_f).real, [total]])
    target = np.arange(n) * total / n
    s = np.interp(target, Af, np.concatenate([sf, [2 * np.pi]]))
    ok = False
    for _ in range(max_iter):
        A, speed = arc_and_speed(s)
        res = A - target
        res[0] = 0.0
        err = np.max(np.abs(res)) / total
        if err < tol:
            ok = True
            break
        step = res / speed
        # Damped update: keep parameters monotone to protect the bracketing.
        lim = 0.45 * 2.0 * np.pi / n
        step = np.clip(step, -lim, lim)
        s = s - step
        s[0] = 0.0
    if not ok:
        raise NewtonError(
            f"arclength equalization did not reach {tol:g} in {max_iter} "
            "iterations")
    markers = np.asarray(curve(s), dtype=complex)
    return DropBoundary(markers, lam=lam, initial_spacing=total / n)


def curve_from_markers(markers: np.ndarray):
    """Closed-curve callable through marker points (trig interpolant)."""
    m = np.asarray(markers, dtype=complex)

    def curve(svals):
        return sp.trig_eval(m, np.atleast_1d(svals))

    return curve


def self_intersection_suspected(markers: np.ndarray) -> bool:
    """Heuristic self-intersection flag for one closed marker chain.

    The chain is spectrally refined four-fold; points far apart along the
    curve but closer in the plane than the refined spacing indicate a
    crossing (or an unresolvably tight fold).  Legitimate narrow
    re-approaches (gaps near the original spacing and above) pass.
    """
    fine = sp.resample_periodic(markers, 4 * markers.shape[0])
    n = fine.shape[0]
    spacing = float(np.mean(np.abs(np.diff(fine, append=fine[:1]))))
    idx = np.arange(n)
    for lo in range(0, n, 1024):
        hi = min(lo + 1024, n)
        d = np.abs(fine[lo:hi, None] - fine[None, :])
        ring = np.abs(idx[lo:hi, None] - idx[None, :])
        ring = np.minimum(ring, n - ring)
        if np.any(d[ring > 8] < 0.6 * spacing):
            return True
    return False


def _winding_inside(poly: np.ndarray, points: np.ndarray) -> np.ndarray:
    """True where a point is enclosed by the closed marker polygon."""
    a = poly[None, :] - points[:, None]
    b = np.roll(poly, -1)[None, :] - points[:, None]
    ang = np.angle(b / a)
    return np.abs(ang.sum(axis=1)) > np.pi


def boundaries_disjoint(boundaries: list[DropBoundary], min_gap: float = 0.0) -> bool:
    """Heuristic pairwise disjointness check on marker clouds.

    Flags marker clouds at numerically-zero separation and crossing or
    nesting via a winding test; exact curve intersection testing is out of
    scope, and legitimately narrow clearances (the near-singular quadrature's
    job) pass.
    """
    for a in range(len(boundaries)):
        za = boundaries[a].markers
        for b in range(a + 1, len(boundaries)):
            zb = boundaries[b].markers
            d2 = np.abs(za[:, None] - zb[None, :])
            if np.min(d2) <= max(min_gap, 1e-10):
                return False
            # crossing or nesting: every interface must bound exterior fluid
            if np.any(_winding_inside(za, zb)) or np.any(_winding_inside(zb, za)):
                return False
    return True
