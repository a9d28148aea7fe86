"""Velocity evaluation on the interfaces and in the flow field.

With the density solved, the velocity anywhere in the plane is a pair of
layer sums over the panel nodes.  On the boundary the Cauchy-type kernel is
a principal value; subtracting the target density value leaves a smooth
integrand whose diagonal contribution is the node density derivative, so the
on-surface formula reads

  u_i = -(w_i/pi) omega'_i
        - (1/pi) sum_{j != i} (omega_j - omega_i) Re{ w_j tau'_j/(tau_j - tau_i) }
        - (1/(pi i)) sum_j M2_ij conj(omega_j),

with omega' the per-panel 16-point derivative with respect to the quadrature
parameter.  Off the boundary no subtraction is needed.  Both paths splice in
the interpolatory special-quadrature corrections for near-singular
target-panel pairs and run as chunked direct sums (no dense matrices kept).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import special_quad as sq
from ._kernels import velocity_sums
from .grids import PanelGrid, node_parameter_derivative


@dataclass
class VelocityField:
    """Velocities u1 + i*u2 at a set of evaluation points."""
    points: np.ndarray
    u: np.ndarray


def _chunk_sums(grid: PanelGrid, omega: np.ndarray, targets: np.ndarray,
                node_targets: bool):
    """Direct kernel sums over all nodes for a batch of targets.

    Returns (S1, S0, S2): sum of Re-kernel times omega, Re-kernel row sums,
    and the M2 kernel applied to conj(omega).  For node targets the Re-kernel
    diagonal is dropped (handled by the caller via omega') and the M2
    diagonal takes its analytic limit.
    """
    wdt = grid.weights * grid.dtau
    d2 = np.imag(grid.weights * grid.ddtau * np.conj(grid.dtau)) \
        / (2.0 * np.conj(grid.dtau) ** 2)
    S1r, S1i, S0, S2r, S2i = velocity_sums(
        np.ascontiguousarray(grid.tau.real), np.ascontiguousarray(grid.tau.imag),
        np.ascontiguousarray(wdt.real), np.ascontiguousarray(wdt.imag),
        np.ascontiguousarray(d2.real), np.ascontiguousarray(d2.imag),
        np.ascontiguousarray(omega.real), np.ascontiguousarray(omega.imag),
        np.ascontiguousarray(targets.real), np.ascontiguousarray(targets.imag),
        node_targets)
    return S1r + 1j * S1i, S0, S2r + 1j * S2i


def _apply_plan(grid: PanelGrid, omega: np.ndarray, plan: sq.SpecialQuadPlan,
                S1, S0, S2, target_of_pair: np.ndarray):
    """Replace naive panel sums by corrected ones for all plan pairs."""
    if plan.n_pairs == 0:
        return
    cols = plan.node_columns()
    tau_p = grid.tau[cols]
    wdt_p = (grid.weights * grid.dtau)[cols]
    om_p = omega[cols]
    dz = tau_p - plan.target_z[:, None]
    naive_R = np.real(wdt_p / dz)
    naive_M2 = np.imag(wdt_p * np.conj(dz)) / np.conj(dz) ** 2
    corr_R = np.real(plan.wP)
    m2w = plan.m2_weights(grid)
    dS1 = np.sum((corr_R - naive_R) * om_p, axis=1)
    dS0 = np.sum(corr_R - naive_R, axis=1)
    dS2 = np.sum((m2w - naive_M2) * np.conj(om_p), axis=1)
    np.add.at(S1, target_of_pair, dS1)
    np.add.at(S0, target_of_pair, dS0)
    np.add.at(S2, target_of_pair, dS2)


def boundary_velocity(omega: np.ndarray, grid: PanelGrid,
                      plan: sq.SpecialQuadPlan) -> np.ndarray:
    """Interfacial velocity at every panel node."""
    om_prime = node_parameter_derivative(omega, grid)
    S1, S0, S2 = _chunk_sums(grid, omega, grid.tau, node_targets=True)
    if plan.n_pairs:
        _apply_plan(grid, omega, plan, S1, S0, S2, plan.target_idx)
    pv = S1 - omega * S0
    return (-(grid.weights / np.pi) * om_prime - pv / np.pi
            + 1j * S2 / np.pi)


def field_velocity(omega: np.ndarray, grid: PanelGrid, points: np.ndarray,
                   plan: sq.SpecialQuadPlan | None = None,
                   sq_tol: float = sq.SQ_TOL) -> VelocityField:
    """Flow velocity at arbitrary points off the interfaces.

    The representation is global (valid inside and outside every drop); a
    near-singular plan for the given points is built on the fly unless one
    is passed in.  Points within 1e-14 of a node are rejected; evaluate those
    with boundary_velocity instead.
    """
    points = np.asarray(points, dtype=complex).ravel()
    if points.size == 0:
        return VelocityField(points=points, u=np.empty(0, dtype=complex))
    if plan is None:
        plan = sq.build_plan(grid, points, target_nodes=False, tol=sq_tol)
    S1, _, S2 = _chunk_sums(grid, omega, points, node_targets=False)
    if plan.n_pairs:
        S0 = np.zeros(points.shape[0])
        _apply_plan(grid, omega, plan, S1, S0, S2, plan.target_idx)
    u = -S1 / np.pi + 1j * S2 / np.pi
    return VelocityField(points=points, u=u)
