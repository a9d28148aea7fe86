import numpy as np

from dropflow import geometry as geo, grids, spectral as sp

from helpers import flower, uniform_markers


def gl_params(npan):
    xi = sp.gauss_legendre_nodes()
    return np.concatenate([2 * np.pi * (p + (1 + xi) / 2) / npan
                           for p in range(npan)])


def test_circle_nodes_on_circle():
    b = geo.DropBoundary(np.exp(1j * sp.uniform_params(32)))
    g = grids.to_panel_grid(geo.resample(b, 64))
    assert np.max(np.abs(np.abs(g.tau) - 1.0)) < 1e-13
    assert np.max(np.abs(g.dtau - 1j * g.tau)) < 1e-12
    assert abs(g.arclength(0) - 2 * np.pi) < 1e-12


def test_band_limited_node_values_analytic():
    def curve(s):
        return np.exp(1j * s) * (1 + 0.1 * np.cos(5 * s) + 0.05 * np.sin(9 * s))
    b = geo.DropBoundary(curve(sp.uniform_params(64)))
    g = grids.to_panel_grid(geo.resample(b, 128))
    svals = gl_params(g.n_panels)
    assert np.max(np.abs(g.tau - curve(svals))) < 1e-12


def test_flower_nodes_match_direct_fourier_sum():
    # Independent oracle: direct summation of the interpolant's Fourier
    # series (separate code path from the mode-folding fast evaluator).
    m = uniform_markers(flower, 6400)
    b = geo.DropBoundary(m)
    g = grids.to_panel_grid(b)
    svals = gl_params(g.n_panels)
    n = len(m)
    c = np.fft.fft(m) / n
    k = sp.fourier_modes(n)
    ref = np.zeros(len(svals), dtype=complex)
    for lo in range(0, len(svals), 512):
        ref[lo:lo + 512] = np.exp(1j * np.outer(svals[lo:lo + 512], k)) @ c
    assert np.max(np.abs(g.tau - ref)) / np.max(np.abs(ref)) < 1e-12


def test_to_equispaced_constant_and_poly15():
    b = geo.DropBoundary(np.exp(1j * sp.uniform_params(64)))
    dbl = geo.resample(b, 128)
    g = grids.to_panel_grid(dbl)
    const = np.full(g.n_nodes, 2.3 - 1.1j)
    out = grids.to_equispaced(const, g, 0)
    assert np.max(np.abs(out - (2.3 - 1.1j))) < 1e-13
    # degree-15 polynomial in the local panel coordinate reproduces exactly
    npan = g.n_panels
    h = 2 * np.pi / npan
    svals = gl_params(npan)
    loc = (svals % h) / h * 2 - 1
    pol = loc ** 15 - 3 * loc ** 4 + 0.5
    out = grids.to_equispaced(pol.astype(complex), g, 0)
    se = sp.uniform_params(128)
    loce = (se % h) / h * 2 - 1
    assert np.max(np.abs(out - (loce ** 15 - 3 * loce ** 4 + 0.5))) < 1e-12


def test_round_trip_band_limited():
    def curve(s):
        return np.exp(1j * s) * (1 + 0.2 * np.cos(7 * s))
    b = geo.equalize_arclength(curve, 256)
    dbl = geo.resample(b, 512)
    g = grids.to_panel_grid(dbl)
    # a smooth periodic field sampled at nodes, through the panel grid and back
    svals = gl_params(g.n_panels)
    f = np.exp(2j * svals) + 0.3 * np.sin(3 * svals)
    back = grids.to_equispaced(f, g, 0)
    se = sp.uniform_params(512)
    ref = np.exp(2j * se) + 0.3 * np.sin(3 * se)
    assert np.max(np.abs(back - ref)) < 1e-10


def test_panel_quadrature_exactness_degree_31():
    b = geo.DropBoundary(np.exp(1j * sp.uniform_params(64)))
    g = grids.to_panel_grid(geo.resample(b, 128))
    npan = g.n_panels
    h = 2 * np.pi / npan
    svals = gl_params(npan)
    rng = np.random.default_rng(5)
    coef = rng.standard_normal(32)
    for p in range(0, npan, 3):
        sl = g.panel_slice(p)
        loc = (svals[sl] - p * h) / h * 2 - 1
        vals = np.polynomial.polynomial.polyval(loc, coef)
        got = np.sum(g.weights[sl] * vals)
        exact = sum(coef[k] * ((1 - (-1) ** (k + 1)) / (k + 1)) for k in range(32))
        exact *= h / 2
        assert abs(got - exact) < 1e-13 * max(1, abs(exact))


def test_arclength_matches_trapezoid():
    # Composite Gauss-Legendre and trapezoidal arclengths agree once the
    # derivative spectrum is resolved (smooth curve at generous N).
    b = geo.equalize_arclength(lambda s: 2 * np.cos(s) + 1j * np.sin(s), 512)
    dbl = geo.resample(b, 1024)
    g = grids.to_panel_grid(dbl)
    assert abs(g.arclength(0) - geo.arclength(b.markers)) < 1e-10
