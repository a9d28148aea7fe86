"""Compiled inner loops for the dense kernel sums.

The direct summations touch O(targets x sources) pairs with a handful of
flops each; fusing them into single passes avoids the dozens of full-array
sweeps the vectorized forms cost.  Only plain arithmetic lives here - all
logic stays in the calling modules.
"""

import numba
import numpy as np

_sig_cache = {"cache": True, "fastmath": False}


@numba.njit(**_sig_cache)
def velocity_sums(tr, ti, wdtr, wdti, d2r, d2i, omr, omi,
                  zr, zi, node_targets):
    """Re-kernel and stresslet-kernel sums for a batch of targets.

    Returns (S1, S0, S2) packed as float arrays: S1 = sum_j R_ij omega_j,
    S0 = sum_j R_ij, S2 = sum_j M2_ij conj(omega_j); for node targets the
    Re-kernel diagonal is dropped and the M2 diagonal takes (d2r, d2i).
    """
    nt = zr.shape[0]
    m = tr.shape[0]
    S1r = np.zeros(nt)
    S1i = np.zeros(nt)
    S0 = np.zeros(nt)
    S2r = np.zeros(nt)
    S2i = np.zeros(nt)
    for i in range(nt):
        s1r = 0.0
        s1i = 0.0
        s0 = 0.0
        s2r = 0.0
        s2i = 0.0
        for j in range(m):
            if node_targets and j == i:
                s2r += d2r[i] * omr[i] + d2i[i] * omi[i]
                s2i += d2i[i] * omr[i] - d2r[i] * omi[i]
                continue
            a = tr[j] - zr[i]
            b = ti[j] - zi[i]
            r2 = a * a + b * b
            num_re = (wdtr[j] * a + wdti[j] * b) / r2
            num_im = (wdti[j] * a - wdtr[j] * b) / r2
            s1r += num_re * omr[j]
            s1i += num_re * omi[j]
            s0 += num_re
            aa = a * a - b * b
            ab2 = 2.0 * a * b
            m2r = num_im * aa / r2
            m2i = num_im * ab2 / r2
            s2r += m2r * omr[j] + m2i * omi[j]
            s2i += m2i * omr[j] - m2r * omi[j]
        S1r[i] = s1r
        S1i[i] = s1i
        S0[i] = s0
        S2r[i] = s2r
        S2i[i] = s2i
    return S1r, S1i, S0, S2r, S2i


@numba.njit(**_sig_cache)
def assemble_kernels(tr, ti, wdtr, wdti, d1, d2r, d2i, rows):
    """Dense M1, Re M2, Im M2 for the given target rows (diagonal limits
    inserted where a row index equals the source index)."""
    nr = rows.shape[0]
    m = tr.shape[0]
    m1 = np.empty((nr, m))
    m2r = np.empty((nr, m))
    m2i = np.empty((nr, m))
    for r in range(nr):
        i = rows[r]
        for j in range(m):
            if j == i:
                m1[r, j] = d1[i]
                m2r[r, j] = d2r[i]
                m2i[r, j] = d2i[i]
                continue
            a = tr[j] - tr[i]
            b = ti[j] - ti[i]
            r2 = a * a + b * b
            num_im = (wdti[j] * a - wdtr[j] * b) / r2
            m1[r, j] = num_im
            aa = a * a - b * b
            m2r[r, j] = num_im * aa / r2
            m2i[r, j] = num_im * 2.0 * a * b / r2
    return m1, m2r, m2i
