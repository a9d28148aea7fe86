"""Nystrom discretization and solve of the interfacial integral equation.

The unknown is a complex density omega on the panel nodes.  The discrete
system applies, per target node i,

    omega_i + (beta_i/pi) sum_j omega_j M1_ij
            + (beta_i/pi) sum_j conj(omega_j) M2_ij
            + beta_i sum_j omega_j |w_j tau'_j|  =  -(gamma_i/2) tau'_i/|tau'_i|

with the smooth-kernel matrices

    M1_ij = Im{ w_j tau'_j / (tau_j - tau_i) },
    M2_ij = Im{ w_j tau'_j (conj(tau_j) - conj(tau_i)) } / (conj(tau_j) - conj(tau_i))^2,

their analytic diagonal limits, and special-quadrature replacements for the
near-singular target-panel pairs listed in the plan.  The conj(omega) term
makes the operator linear over the reals but not over the complexes, so the
solver is a full GMRES run in the real inner product Re<x, y> on complex
storage (equivalent to GMRES on the doubled real system).

beta = (1-lambda)/(1+lambda) vanishes for viscosity ratio 1; rows with
beta = 0 reduce to the identity and are never assembled, so matched-viscosity
scenes run without any dense kernel matrices.  Assembly and matvec work on
real matrices throughout (M1, Re M2, Im M2): real GEMV avoids the silent
promotion of float matrices against complex vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import assemble_kernels
from .grids import PanelGrid
from .special_quad import SpecialQuadPlan


class GMRESError(RuntimeError):
    """Iteration cap reached without meeting the residual tolerance."""


@dataclass
class Density:
    """Layer density at all panel nodes (the solve unknown)."""
    omega: np.ndarray


@dataclass
class MaterialCoefficients:
    beta: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_grid(cls, grid: PanelGrid) -> "MaterialCoefficients":
        lam = grid.lambdas[grid.node_drop]
        return cls(beta=(1.0 - lam) / (1.0 + lam), gamma=1.0 / (1.0 + lam))


class StokesSystem:
    """Assembled (lazily) dense operator for one geometry snapshot.

    Only rows with beta != 0 carry kernel sums; the arclength term is rank
    one.  Assembly costs O(R * M) for R active rows and is reused across all
    GMRES iterations.
    """

    def __init__(self, grid: PanelGrid, coeffs: MaterialCoefficients,
                 plan: SpecialQuadPlan):
        self.grid = grid
        self.coeffs = coeffs
        self.plan = plan
        self.arc = np.abs(grid.weights * grid.dtau)
        self.rows = np.nonzero(coeffs.beta != 0.0)[0]
        self._m1 = None
        self._m2r = None
        self._m2i = None

    @property
    def rhs(self) -> np.ndarray:
        g = self.grid
        return -0.5 * self.coeffs.gamma * g.dtau / np.abs(g.dtau)

    def _assemble(self):
        g = self.grid
        rows = self.rows
        wdt = g.weights * g.dtau
        d1 = np.imag(g.weights * g.ddtau / (2.0 * g.dtau))
        d2 = np.imag(g.weights * g.ddtau * np.conj(g.dtau)) / (2.0 * np.conj(g.dtau) ** 2)
        m1, m2r, m2i = assemble_kernels(
            np.ascontiguousarray(g.tau.real), np.ascontiguousarray(g.tau.imag),
            np.ascontiguousarray(wdt.real), np.ascontiguousarray(wdt.imag),
            d1, np.ascontiguousarray(d2.real), np.ascontiguousarray(d2.imag),
            rows)
        # Splice in the special-quadrature panel corrections.
        if self.plan.n_pairs:
            pos = np.full(g.n_nodes, -1)
            pos[rows] = np.arange(rows.shape[0])
            tgt = self.plan.target_idx
            sel = (tgt >= 0) & (pos[np.maximum(tgt, 0)] >= 0)
            if np.any(sel):
                m2w = self.plan.m2_weights(g)
                cols = self.plan.node_columns()
                for k in np.nonzero(sel)[0]:
                    r = pos[tgt[k]]
                    m1[r, cols[k]] = np.imag(self.plan.wP[k])
                    m2r[r, cols[k]] = m2w[k].real
                    m2i[r, cols[k]] = m2w[k].imag
        self._m1, self._m2r, self._m2i = m1, m2r, m2i

    def matvec(self, omega: np.ndarray) -> np.ndarray:
        out = omega.copy()
        if self.rows.size == 0:
            return out
        if self._m1 is None:
            self._assemble()
        xr, xi = np.ascontiguousarray(omega.real), np.ascontiguousarray(omega.imag)
        # M1 @ omega + M2 @ conj(omega), all in real GEMVs.
        ur = self._m1 @ xr + self._m2r @ xr + self._m2i @ xi
        ui = self._m1 @ xi + self._m2i @ xr - self._m2r @ xi
        ksum = (ur + 1j * ui) / np.pi
        out[self.rows] += self.coeffs.beta[self.rows] * (ksum + np.dot(self.arc, omega))
        return out


def apply_system(omega: np.ndarray, grid: PanelGrid,
                 coeffs: MaterialCoefficients, plan: SpecialQuadPlan) -> np.ndarray:
    """One application of the discrete integral operator to a density."""
    return StokesSystem(grid, coeffs, plan).matvec(omega)


def _re_dot(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(np.vdot(x, y)))


def gmres_real(matvec, b: np.ndarray, tol: float, maxiter: int = 500,
               x0: np.ndarray | None = None):
    """Full GMRES over the real field with complex vector storage.

    The Arnoldi inner product is Re<x, y>, under which a real-linear
    operator (here: one containing conj(omega) terms) behaves exactly like
    its doubled real form; Hessenberg entries and Givens rotations are real.
    The residual is measured relative to |b| regardless of the warm start.

    Returns (x, iterations, relative residual).
    """
    bnorm = np.sqrt(_re_dot(b, b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    r = b if x0 is None else b - matvec(x0)
    rnorm = np.sqrt(_re_dot(r, r))
    if rnorm / bnorm <= tol:
        return (np.zeros_like(b) if x0 is None else x0.copy()), 0, rnorm / bnorm
    V = [r / rnorm]
    H = np.zeros((maxiter + 1, maxiter))
    cs = np.zeros(maxiter)
    sn = np.zeros(maxiter)
    g = np.zeros(maxiter + 1)
    g[0] = rnorm
    for j in range(maxiter):
        w = matvec(V[j])
        for i in range(j + 1):
            H[i, j] = _re_dot(V[i], w)
            w = w - H[i, j] * V[i]
        hsub = np.sqrt(_re_dot(w, w))
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        rho = np.hypot(H[j, j], hsub)
        cs[j], sn[j] = H[j, j] / rho, hsub / rho
        H[j, j] = rho
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        res = abs(g[j + 1]) / bnorm
        if res <= tol or hsub <= 1e-300:
            y = np.zeros(j + 1)
            for i in range(j, -1, -1):
                y[i] = (g[i] - H[i, i + 1:j + 1] @ y[i + 1:j + 1]) / H[i, i]
            x = np.zeros_like(b) if x0 is None else x0.copy()
            for i in range(j + 1):
                x += y[i] * V[i]
            return x, j + 1, res
        V.append(w / hsub)
    raise GMRESError(f"GMRES did not reach tol={tol:g} in {maxiter} iterations "
                     f"(residual {res:.3e})")


def solve_density(grid: PanelGrid, coeffs: MaterialCoefficients,
                  plan: SpecialQuadPlan, tol: float = 1e-10,
                  maxiter: int = 500, x0: np.ndarray | None = None):
    """Solve the discrete integral equation for the density.

    `x0` warm-starts the Krylov iteration (a density from a nearby geometry,
    e.g. the previous time-step stage).  Returns (Density, iterations,
    relative residual).
    """
    system = StokesSystem(grid, coeffs, plan)
    x, iters, res = gmres_real(system.matvec, system.rhs, tol, maxiter, x0=x0)
    return Density(x), iters, res
