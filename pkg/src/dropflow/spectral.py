"""Fourier and panel-local polynomial utilities shared across the solver.

All closed curves and periodic fields in this package live on uniform grids
in a parameter s in [0, 2pi) and are manipulated through their trigonometric
interpolants.  This module collects the FFT-based primitives (differentiation,
band-limited resampling, antiderivatives, off-grid evaluation) plus the
16-point Gauss-Legendre machinery (barycentric interpolation and
differentiation matrices) used on composite quadrature panels.
"""

from __future__ import annotations

import functools

import numpy as np

PANEL_SIZE = 16


def uniform_params(n: int) -> np.ndarray:
    """Parameter values 2*pi*j/n, j = 0..n-1."""
    return 2.0 * np.pi * np.arange(n) / n


def fourier_modes(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT ordering, Nyquist stored as -n/2."""
    return np.fft.fftfreq(n, d=1.0 / n)


def spectral_derivative(vals: np.ndarray, order: int = 1) -> np.ndarray:
    """Differentiate periodic samples with respect to the parameter.

    Odd-order derivatives zero the Nyquist mode, the symmetric choice for
    even sample counts.
    """
    n = vals.shape[0]
    k = fourier_modes(n)
    fac = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        fac[n // 2] = 0.0
    return np.fft.ifft(np.fft.fft(vals) * fac)


def resample_periodic(vals: np.ndarray, m: int) -> np.ndarray:
    """Resample periodic data from n to m points via the Fourier spectrum.

    Upsampling pads with zeros (splitting the Nyquist bin symmetrically);
    downsampling truncates, folding the +-m/2 bins together so that a
    pad-then-truncate round trip is exact.
    """
    n = vals.shape[0]
    if n % 2 or m % 2:
        raise ValueError("resample_periodic requires even sizes")
    if m == n:
        return vals.copy()
    F = np.fft.fft(vals)
    G = np.zeros(m, dtype=complex)
    h = min(n, m) // 2
    G[:h] = F[:h]
    if h > 1:
        G[m - h + 1:] = F[n - h + 1:]
    if m > n:
        G[h] = 0.5 * F[h]
        G[m - h] = 0.5 * F[h]
    else:
        G[h] = F[h] + F[n - h]
    return np.fft.ifft(G) * (m / n)


def periodic_antiderivative(vals: np.ndarray) -> np.ndarray:
    """Antiderivative G(s_j) = int_0^{s_j} g ds of periodic samples, G(0) = 0.

    The mean of g contributes a linear (secular) term; the rest is summed
    spectrally.
    """
    n = vals.shape[0]
    k = fourier_modes(n)
    c = np.fft.fft(vals)
    a = np.zeros_like(c)
    nz = k != 0
    a[nz] = c[nz] / (1j * k[nz])
    per = np.fft.ifft(a)
    s = uniform_params(n)
    return per - per[0] + (c[0] / n) * s


def trig_eval(vals: np.ndarray, s: np.ndarray, order: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant of periodic samples at points s.

    Direct O(n * len(s)) summation; the Nyquist bin is split into two
    half-weight modes +-n/2 so position evaluation matches the symmetric
    interpolant, and is dropped from odd derivatives.
    """
    n = vals.shape[0]
    c = np.fft.fft(vals) / n
    k = fourier_modes(n)
    s = np.asarray(s, dtype=float)
    if n % 2 == 0:
        kk = np.concatenate([k, [n / 2]])
        cc = np.concatenate([c, [0.5 * c[n // 2]]])
        cc[n // 2] = 0.5 * c[n // 2]
        kk[n // 2] = -n / 2
    else:
        kk, cc = k, c
    fac = (1j * kk) ** order if order else np.ones_like(kk, dtype=complex)
    return np.exp(1j * np.outer(s, kk)) @ (cc * fac)


def panel_gl_eval(vals: np.ndarray, n_panels: int, orders=(0,)) -> list[np.ndarray]:
    """Evaluate a periodic interpolant at composite Gauss-Legendre nodes.

    The targets are the 16 Gauss-Legendre points of each of `n_panels` equal
    parameter panels tiling [0, 2pi).  Because the node offsets repeat from
    panel to panel, each of the 16 offsets reduces to an inverse DFT of the
    modulated, mode-folded spectrum: exact, and O(n log n) overall.

    Returns one flat array per requested derivative order, nodes ordered
    panel-major.
    """
    n = vals.shape[0]
    c = np.fft.fft(vals) / n
    k = fourier_modes(n)
    if n % 2 == 0:
        # Split the Nyquist bin symmetrically (exactly zero for padded data).
        c = np.concatenate([c, [0.5 * c[n // 2]]])
        k = np.concatenate([k, [n / 2]])
        c[n // 2] = 0.5 * c[n // 2]
        k[n // 2] = -n / 2
    kfold = (k.astype(np.int64)) % n_panels
    xi = gauss_legendre_nodes()
    out = []
    for order in orders:
        ck = c * (1j * k) ** order if order else c
        res = np.empty((n_panels, PANEL_SIZE), dtype=complex)
        for g in range(PANEL_SIZE):
            delta = 2.0 * np.pi * 0.5 * (1.0 + xi[g]) / n_panels
            folded = np.zeros(n_panels, dtype=complex)
            np.add.at(folded, kfold, ck * np.exp(1j * k * delta))
            res[:, g] = np.fft.ifft(folded) * n_panels
        out.append(res.reshape(-1))
    return out


def fourier_tail_fraction(vals: np.ndarray) -> float:
    """Fraction of spectral energy carried by the top 10% of modes."""
    c = np.fft.fft(vals)
    n = vals.shape[0]
    k = np.abs(fourier_modes(n))
    cutoff = 0.9 * (n // 2)
    tail = np.sum(np.abs(c[k >= cutoff]) ** 2)
    total = np.sum(np.abs(c) ** 2)
    return float(tail / total) if total > 0 else 0.0


@functools.lru_cache(maxsize=1)
def _gl16() -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(PANEL_SIZE)
    return x, w


def gauss_legendre_nodes() -> np.ndarray:
    return _gl16()[0]


def gauss_legendre_weights() -> np.ndarray:
    return _gl16()[1]


def barycentric_weights(x: np.ndarray) -> np.ndarray:
    """Barycentric weights for interpolation nodes x (any spacing)."""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


def interpolation_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Matrix mapping values at nodes x to interpolated values at points y."""
    w = barycentric_weights(x)
    L = np.empty((len(y), len(x)))
    for i, yi in enumerate(y):
        d = yi - x
        hit = np.nonzero(d == 0.0)[0]
        if hit.size:
            L[i] = 0.0
            L[i, hit[0]] = 1.0
        else:
            t = w / d
            L[i] = t / np.sum(t)
    return L


def differentiation_matrix(x: np.ndarray) -> np.ndarray:
    """Spectral differentiation matrix on nodes x via barycentric weights."""
    w = barycentric_weights(x)
    n = len(x)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
        D[i, i] = -np.sum(D[i])
    return D


@functools.lru_cache(maxsize=1)
def panel_to_equispaced_matrix() -> np.ndarray:
    """Interpolation from a panel's 16 GL nodes to its 16 equispaced points.

    With point counts kept multiples of 16, every panel contains exactly 16
    equispaced parameter points at the same local offsets, so one 16x16
    matrix serves all panels.
    """
    y = np.arange(PANEL_SIZE) / (PANEL_SIZE / 2.0) - 1.0
    return interpolation_matrix(gauss_legendre_nodes(), y)


@functools.lru_cache(maxsize=1)
def panel_differentiation_matrix() -> np.ndarray:
    """d/dxi on the 16 GL nodes of the reference panel [-1, 1]."""
    return differentiation_matrix(gauss_legendre_nodes())


def vandermonde_coefficients(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Solve sum_k c_k x_j^k = f_j by Bjorck-Pereyra progressive elimination.

    Stable for the panel-sized (16 node) systems used here; nodes and data
    may be complex.
    """
    c = np.asarray(f, dtype=complex).copy()
    n = c.shape[0]
    for k in range(n - 1):
        for j in range(n - 1, k, -1):
            c[j] = (c[j] - c[j - 1]) / (x[j] - x[j - k - 1])
    for k in range(n - 2, -1, -1):
        c[k:n - 1] -= x[k] * c[k + 1:n]
    return c


def vandermonde_weights(x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Solve sum_j r_j x_j^k = p_k (transposed Vandermonde system).

    The solution plays the role of quadrature weights exact on monomials
    up to degree n-1 for the target values p_k.
    """
    r = np.asarray(p, dtype=complex).copy()
    n = r.shape[0]
    for k in range(n - 1):
        r[k + 1:n] -= x[k] * r[k:n - 1].copy()
    for k in range(n - 2, -1, -1):
        d = x[k + 1:n] - x[:n - k - 1]
        r[k + 1:n] /= d
        r[k:n - 1] -= r[k + 1:n]
    return r
