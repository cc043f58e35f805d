"""Costate integration and first-order descent machinery.

The directional derivative of the terminal cost with respect to the
switching weights is realized through the adjoint system

    pdot = -(df/dx)^T p,   p(t_f) = grad h(x(t_f)),

integrated backward along the forward trajectory with RK4 (midpoint states
come from 4th-order Hermite interpolation of the stored samples).  Because
the dynamics are affine in the weights, the derivative along a direction
eta is the weighted sum of per-cell, per-mode integrals of p . f_i, and
the pointwise minimizer over the simplex is a vertex in every cell.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import DimensionError, GridMismatchError, IntegrationBlowupError
from .model import eval_cost_gradient
from .sim import DEFAULT_SUBSTEPS, Trajectory, simulate
from .signal import PureSignal, SignalDirection, vertex_signal


@dataclasses.dataclass(frozen=True, eq=False)
class CostateTrajectory:
    """Adjoint path sampled on the same layout as the forward trajectory."""

    grid: "Grid"
    substeps: int
    times: np.ndarray
    costates: np.ndarray

    def __post_init__(self):
        for name in ("times", "costates"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def terminal_costate(self) -> np.ndarray:
        return self.costates[-1]


def _cell_jacobian(problem, drow, urow):
    active = [
        (float(drow[i]), problem.mode_jacobians[i])
        for i in range(problem.n_sigma)
        if drow[i] != 0.0
    ]
    if len(active) == 1 and active[0][0] == 1.0:
        jac = active[0][1]

        def combined(t, x, _jac=jac, _u=urow):
            return np.asarray(_jac(t, x, _u), dtype=float)

        return combined

    def combined(t, x, _active=active, _u=urow):
        acc = None
        for w, jac in _active:
            v = np.asarray(jac(t, x, _u), dtype=float)
            acc = w * v if acc is None else acc + w * v
        return acc

    return combined


def _cell_field(problem, drow, urow):
    active = [
        (float(drow[i]), problem.modes[i])
        for i in range(problem.n_sigma)
        if drow[i] != 0.0
    ]

    def field(t, x, _active=active, _u=urow):
        acc = None
        for w, f in _active:
            v = np.asarray(f(t, x, _u), dtype=float)
            acc = w * v if acc is None else acc + w * v
        return acc

    return field


def integrate_costate(problem, traj, s) -> CostateTrajectory:
    """Backward RK4 integration of the adjoint along ``traj``.

    ``traj`` must have been produced by simulating ``s``.
    """
    if traj.grid != s.grid:
        raise GridMismatchError("trajectory and signal live on different grids")
    m = traj.substeps
    times = traj.times
    states = traj.states
    n_cells = s.grid.n_cells
    costates = np.empty_like(states)
    p = eval_cost_gradient(problem, states[-1])
    costates[-1] = p
    for c in range(n_cells - 1, -1, -1):
        urow = s.u[c] if problem.n_u else None
        jac = _cell_jacobian(problem, s.d[c], urow)
        field = _cell_field(problem, s.d[c], urow)
        for j in range(m - 1, -1, -1):
            left = c * m + j
            right = left + 1
            tl = times[left]
            tr = times[right]
            h = tr - tl
            xl = states[left]
            xr = states[right]
            fl = field(tl, xl)
            fr = field(tr, xr)
            # 4th-order Hermite midpoint of the stored trajectory samples
            xm = 0.5 * (xl + xr) + 0.125 * h * (fl - fr)
            tm = tl + 0.5 * h
            a_r = jac(tr, xr)
            a_m = jac(tm, xm)
            a_l = jac(tl, xl)
            hb = -h
            k1 = -(a_r.T @ p)
            k2 = -(a_m.T @ (p + 0.5 * hb * k1))
            k3 = -(a_m.T @ (p + 0.5 * hb * k2))
            k4 = -(a_l.T @ (p + hb * k3))
            p = p + (hb / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            costates[left] = p
        if not np.all(np.isfinite(p)):
            raise IntegrationBlowupError(
                f"costate became non-finite in cell {c}", cell=c
            )
    return CostateTrajectory(
        grid=s.grid, substeps=m, times=times, costates=costates
    )


def cell_mode_integrals(problem, traj, costate, s) -> np.ndarray:
    """Per-cell, per-mode integrals of p(t) . f_i(t, x(t), u).

    Trapezoidal quadrature on the stored substep samples; shape
    (n_cells, n_sigma).  These integrals carry all first-order information
    about switching-weight perturbations.
    """
    if not traj.same_layout(costate):
        raise GridMismatchError("trajectory and costate layouts differ")
    m = traj.substeps
    n_cells = s.grid.n_cells
    n_sigma = problem.n_sigma
    times = traj.times
    states = traj.states
    ps = costate.costates
    w = np.zeros((n_cells, n_sigma))
    for c in range(n_cells):
        lo = c * m
        urow = s.u[c] if problem.n_u else None
        for i in range(n_sigma):
            f = problem.modes[i]
            acc = 0.0
            for j in range(lo, lo + m):
                h = times[j + 1] - times[j]
                gl = float(ps[j] @ np.asarray(f(times[j], states[j], urow), dtype=float))
                gr = float(
                    ps[j + 1] @ np.asarray(f(times[j + 1], states[j + 1], urow), dtype=float)
                )
                acc += 0.5 * h * (gl + gr)
            w[c, i] = acc
    return w


def directional_derivative_J(problem, traj, costate, s, eta) -> float:
    """First-order change of the terminal cost along a signal direction.

    ``eta`` must be a difference of relaxed signals on the grid of ``s``
    (weight rows summing to zero).  Continuous-input perturbations are out
    of scope; a direction with nonzero input rows is rejected.
    """
    if eta.grid != s.grid:
        raise GridMismatchError("direction lives on a different grid")
    if eta.u.size and float(np.max(np.abs(eta.u))) > 0.0:
        raise DimensionError(
            "directional derivatives with respect to the continuous input "
            "are not supported; direction must have zero input rows"
        )
    w = cell_mode_integrals(problem, traj, costate, s)
    return float(np.sum(eta.d * w))


class ThetaCertificates(NamedTuple):
    theta: float
    nonpositive: bool
    theta_projected: float


def optimality_theta(
    problem, s, x0, substeps=DEFAULT_SUBSTEPS, traj=None
) -> Tuple[float, PureSignal]:
    """Optimality function value and its minimizing vertex direction.

    The minimizer of the directional derivative over all relaxed signals
    decomposes per cell: each cell independently picks the vertex with the
    smallest p . f_i integral (lowest mode index on ties).  The returned
    value is nonpositive by construction; zero certifies first-order
    stationarity on the relaxed space.
    """
    if traj is None:
        traj = simulate(problem, s, x0, substeps)
    costate = integrate_costate(problem, traj, s)
    w = cell_mode_integrals(problem, traj, costate, s)
    current = np.einsum("ci,ci->c", s.d, w)
    best_idx = np.argmin(w, axis=1)
    best = w[np.arange(w.shape[0]), best_idx]
    theta = float(np.sum(best - current))
    direction = vertex_signal(s.grid, best_idx, problem.n_sigma, u=s.u)
    return theta, direction


def theta_is_valid_certificates(
    problem, s, x0, k=8, substeps=DEFAULT_SUBSTEPS, tol=1e-10
) -> ThetaCertificates:
    """Diagnostics certifying the sign condition of the optimality function.

    Returns whether theta(s) <= tol and the theta value at the projected
    pure signal, the pair test suites use to certify validity.
    """
    from .project import project_Rk

    theta, _ = optimality_theta(problem, s, x0, substeps)
    projected = project_Rk(s, k)
    theta_proj, _ = optimality_theta(problem, projected, x0, substeps)
    return ThetaCertificates(
        theta=theta, nonpositive=theta <= tol, theta_projected=theta_proj
    )
