"""Outer iteration, inner descent, and run telemetry.

Each outer iteration takes the current pure iterate, runs the inner
conditional-gradient descent on the relaxed space until the required
fractional decrease is met, projects the result back to a pure signal at a
pulse frequency chosen to keep the projection's cost damage bounded, and
re-samples the projected signal onto the uniform descent grid for the next
round.  Termination: the optimality function of the pure iterate rises
above -epsilon (stationary), the iterates stop moving in the
full-trajectory metric (stalled; trajectory topology only), or the
iteration budget runs out.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import itertools
import time
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .adjoint import optimality_theta
from .errors import (
    AdaptKError,
    EnumerationBudgetError,
    IntegrationBlowupError,
    SwitchoptError,
)
from .project import adapt_k, project_Rk
from .sim import cost_J, psi, simulate
from .signal import (
    Grid,
    PureSignal,
    RelaxedSignal,
    convex_combine,
    is_pure,
    merge_boundaries,
    resample,
    vertex_signal,
)
from .topology import TopologyKind, topo_distance


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    """Framework parameters; defaults reproduce the benchmark runs."""

    epsilon: float = 1e-6
    omega: float = 0.5
    gamma: float = 0.01
    k0: int = 8
    k_max: int = 16
    fixed_k: Optional[int] = None
    l_max: int = 20
    armijo_alpha: float = 0.5
    armijo_beta: float = 0.5
    max_iter: int = 200
    n_cells: int = 256
    substeps: int = 4
    topology: TopologyKind = TopologyKind.TERMINAL_STATE
    stall_floor: float = 1e-4

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.omega < 1.0:
            raise ValueError("omega must lie in (0, 1)")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if not (1 <= self.k0 <= self.k_max):
            raise ValueError("need 1 <= k0 <= k_max")
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ValueError("fixed_k must be >= 1")
        if self.l_max < 1 or self.max_iter < 1:
            raise ValueError("l_max and max_iter must be >= 1")
        if not 0.0 < self.armijo_alpha < 1.0 or not 0.0 < self.armijo_beta < 1.0:
            raise ValueError("Armijo coefficients must lie in (0, 1)")
        if self.n_cells < 1 or self.substeps < 1:
            raise ValueError("n_cells and substeps must be >= 1")
        if not isinstance(self.topology, TopologyKind):
            raise TypeError("topology must be a TopologyKind")
        if not self.stall_floor > 0:
            raise ValueError("stall_floor must be positive")


@dataclasses.dataclass
class IterationRecord:
    """Telemetry for one outer iteration.

    ``psi`` is None for unconstrained problems.  ``k_used``, ``l_used`` and
    ``q_value`` describe the update leaving this iterate and stay None on
    the terminal record.  Extra diagnostic fields carry the inner-descent
    bookkeeping the framework conditions are checked against.
    """

    iteration: int
    cost: float
    theta: float
    psi: Optional[float]
    terminal_state: np.ndarray
    k_used: Optional[int] = None
    l_used: Optional[int] = None
    q_value: Optional[float] = None
    wall_ms: float = 0.0
    theta_r: Optional[float] = None
    j_descent_start: Optional[float] = None
    j_descent_end: Optional[float] = None
    gamma_ok: Optional[bool] = None
    q_bound: Optional[float] = None
    q_ok: Optional[bool] = None
    stall_distance: Optional[float] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.cost):
            raise ValueError(f"iteration {self.iteration}: non-finite cost")
        if self.theta > 1e-10:
            raise ValueError(
                f"iteration {self.iteration}: theta={self.theta} violates "
                "nonpositivity"
            )

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


class SolveStatus(enum.Enum):
    STATIONARY = "stationary"
    STALLED = "stalled"
    MAX_ITER = "max_iter"


class SolveResult(NamedTuple):
    signal: PureSignal
    history: List[IterationRecord]
    status: SolveStatus


class SolveAborted(SwitchoptError):
    """Simulation blew up mid-run; carries the history up to the failure."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


# Step budget for a single integration pass.  Projected pure signals carry
# up to 3 * 2^k cells; beyond this budget the RK4 substeps per cell are
# reduced (never below 1), which keeps the per-cell step far smaller than
# the uniform-grid step anyway.
_STEP_BUDGET = 16384


def effective_substeps(n_cells, substeps) -> int:
    while substeps > 1 and n_cells * substeps > _STEP_BUDGET:
        substeps //= 2
    return max(1, substeps)


class GammaHatResult(NamedTuple):
    signal: RelaxedSignal
    theta: float
    direction: PureSignal
    step_length: float
    no_progress: bool
    j_before: float
    j_after: float


class GammaRResult(NamedTuple):
    signal: RelaxedSignal
    l: int
    flagged: bool
    theta_r: float
    j_start: float
    j_end: float
    gamma_ok: bool


def gamma_hat_step(problem, s, cfg, x0, _precomputed=None) -> GammaHatResult:
    """One conditional-gradient step with Armijo backtracking.

    The descent direction is the vertex signal minimizing the directional
    derivative; the step moves along the convex combination, so iterates
    stay in the simplex without any explicit projection.  If no step length
    down to 1e-12 passes the Armijo test, the input is returned unchanged
    with the no-progress flag set.
    """
    if _precomputed is not None:
        theta, direction, j0 = _precomputed
    else:
        traj = simulate(problem, s, x0, cfg.substeps)
        j0 = cost_J(problem, traj)
        theta, direction = optimality_theta(problem, s, x0, cfg.substeps, traj=traj)
    if theta == 0.0:
        return GammaHatResult(s, theta, direction, 0.0, True, j0, j0)
    lam = 1.0
    while lam >= 1e-12:
        candidate = convex_combine(s, direction, lam)
        j_cand = cost_J(problem, simulate(problem, candidate, x0, cfg.substeps))
        if j_cand - j0 <= cfg.armijo_alpha * lam * theta:
            return GammaHatResult(candidate, theta, direction, lam, False, j0, j_cand)
        lam *= cfg.armijo_beta
    return GammaHatResult(s, theta, direction, 0.0, True, j0, j0)


def gamma_r(problem, s, cfg, x0) -> GammaRResult:
    """Repeat descent steps until the fractional-decrease condition holds.

    Stops at the first l with J(step^l(s)) - J(s) <= gamma * theta(s),
    capped at l_max; the flagged result means the condition could not be
    certified this round.
    """
    traj = simulate(problem, s, x0, cfg.substeps)
    j_start = cost_J(problem, traj)
    theta0, direction0 = optimality_theta(problem, s, x0, cfg.substeps, traj=traj)
    target = cfg.gamma * theta0
    current = s
    j_current = j_start
    precomputed = (theta0, direction0, j_start)
    l = 0
    while l < cfg.l_max:
        step = gamma_hat_step(problem, current, cfg, x0, _precomputed=precomputed)
        precomputed = None
        current = step.signal
        j_current = step.j_after
        l += 1
        if j_current - j_start <= target:
            return GammaRResult(current, l, False, theta0, j_start, j_current, True)
        if step.no_progress:
            return GammaRResult(current, l, True, theta0, j_start, j_current, False)
    return GammaRResult(
        current, cfg.l_max, True, theta0, j_start, j_current,
        j_current - j_start <= target,
    )


def Q_function(problem, s, k, cfg, x0, gamma_out=None) -> float:
    """Cost/constraint damage of projecting the descended signal at level k.

    Unconstrained problems: change of the terminal cost under projection of
    the inner-descent output.  Constrained: max of the cost change and the
    constraint change when the base point is feasible, constraint change
    only when it is infeasible.  Passing ``gamma_out`` reuses one inner
    descent across a k-scan.
    """
    if gamma_out is None:
        gamma_out = gamma_r(problem, s, cfg, x0)
    descended = gamma_out.signal
    projected = project_Rk(descended, k)
    m_eff = effective_substeps(projected.grid.n_cells, cfg.substeps)
    traj_proj = simulate(problem, projected, x0, m_eff)
    dj = cost_J(problem, traj_proj) - gamma_out.j_end
    if problem.unconstrained:
        return dj
    psi_base = psi(problem, simulate(problem, s, x0, cfg.substeps))
    traj_desc = simulate(problem, descended, x0, cfg.substeps)
    dpsi = psi(problem, traj_proj) - psi(problem, traj_desc)
    if psi_base <= 0.0:
        return max(dj, dpsi)
    return dpsi


def _pair_trajectory_distance(problem, a, b, x0, substeps) -> float:
    union = Grid(merge_boundaries(a.grid.boundaries, b.grid.boundaries))
    m_eff = effective_substeps(union.n_cells, substeps)
    traj_a = simulate(problem, resample(a, union), x0, m_eff)
    traj_b = simulate(problem, resample(b, union), x0, m_eff)
    return topo_distance(TopologyKind.FULL_TRAJECTORY, traj_a, traj_b)


def solve(problem, x0, s0, cfg) -> SolveResult:
    """Run the outer iteration from a pure initial signal.

    Returns the final pure iterate (with exact pulse edges), the iteration
    history, and the termination status.
    """
    if not is_pure(s0):
        raise ValueError("initial signal must be pure")
    if s0.grid.t_f != problem.t_f:
        raise ValueError("initial signal horizon differs from the problem's")
    x0 = np.asarray(x0, dtype=float)
    grid = Grid.uniform(problem.t_f, cfg.n_cells)
    pure = s0
    descent = resample(s0, grid)
    history: List[IterationRecord] = []
    status = SolveStatus.MAX_ITER
    prev_pure = None
    stall_run = 0
    for i in range(cfg.max_iter):
        tic = time.perf_counter()
        try:
            m_pure = effective_substeps(pure.grid.n_cells, cfg.substeps)
            traj = simulate(problem, pure, x0, m_pure)
            j_i = cost_J(problem, traj)
            psi_i = psi(problem, traj)
            theta_i, _ = optimality_theta(
                problem, pure, x0, m_pure, traj=traj
            )
            stall_d = None
            if cfg.topology is TopologyKind.FULL_TRAJECTORY and prev_pure is not None:
                stall_d = _pair_trajectory_distance(
                    problem, prev_pure, pure, x0, cfg.substeps
                )
            record = IterationRecord(
                iteration=i,
                cost=j_i,
                theta=theta_i,
                psi=psi_i,
                terminal_state=traj.terminal_state,
                stall_distance=stall_d,
            )
            if theta_i > -cfg.epsilon:
                record.wall_ms = 1e3 * (time.perf_counter() - tic)
                history.append(record)
                status = SolveStatus.STATIONARY
                break
            if stall_d is not None and stall_d < cfg.stall_floor:
                stall_run += 1
                if stall_run >= 3:
                    record.flags = record.flags + ("stalled",)
                    record.wall_ms = 1e3 * (time.perf_counter() - tic)
                    history.append(record)
                    status = SolveStatus.STALLED
                    break
            else:
                stall_run = 0

            flags = []
            gamma_out = gamma_r(problem, descent, cfg, x0)
            if gamma_out.flagged:
                flags.append("gamma_r_cap")
            if cfg.fixed_k is not None:
                k_used = cfg.fixed_k
                q_val = Q_function(
                    problem, descent, k_used, cfg, x0, gamma_out=gamma_out
                )
            else:
                try:
                    k_used, q_val = adapt_k(
                        problem, descent, theta_i, cfg, x0, gamma_out=gamma_out
                    )
                except AdaptKError as err:
                    k_used = cfg.k_max
                    q_val = err.q_values[cfg.k_max]
                    flags.append("k_bound_unmet")
            q_bound = (cfg.omega - 1.0) * cfg.gamma * theta_i
            record.k_used = k_used
            record.l_used = gamma_out.l
            record.q_value = q_val
            record.q_bound = q_bound
            record.q_ok = q_val <= q_bound
            record.theta_r = gamma_out.theta_r
            record.j_descent_start = gamma_out.j_start
            record.j_descent_end = gamma_out.j_end
            record.gamma_ok = gamma_out.gamma_ok
            record.flags = tuple(flags)

            prev_pure = pure
            pure = project_Rk(gamma_out.signal, k_used)
            descent = resample(pure, grid)
        except IntegrationBlowupError as err:
            raise SolveAborted(
                f"run aborted at iteration {i}: {err}", history
            ) from err
        record.wall_ms = 1e3 * (time.perf_counter() - tic)
        history.append(record)
    return SolveResult(pure, history, status)


def oracle_enumerate(problem, x0, grid, substeps=4, budget=1_000_000):
    """Brute-force minimum over all vertex signals on a coarse grid.

    Candidates are enumerated in lexicographic mode order; ties keep the
    first (lexicographically smallest) sequence.  Errors out when the
    candidate count exceeds the budget.
    """
    n_candidates = problem.n_sigma ** grid.n_cells
    if n_candidates > budget:
        raise EnumerationBudgetError(
            f"{problem.n_sigma}^{grid.n_cells} = {n_candidates} candidates "
            f"exceed the budget of {budget}"
        )
    u = None
    if problem.n_u > 0:
        u = np.tile(
            0.5 * (problem.u_box[0] + problem.u_box[1]), (grid.n_cells, 1)
        )
    best_signal = None
    best_cost = np.inf
    x0 = np.asarray(x0, dtype=float)
    for modes in itertools.product(range(problem.n_sigma), repeat=grid.n_cells):
        candidate = vertex_signal(grid, np.asarray(modes), problem.n_sigma, u=u)
        cost = cost_J(problem, simulate(problem, candidate, x0, substeps))
        if cost < best_cost:
            best_cost = cost
            best_signal = candidate
    return best_signal, best_cost


# ---------------------------------------------------------------------------
# History CSV: iter, J, theta, psi, k, l, Q, x*_tf, wall_ms
# ---------------------------------------------------------------------------

def history_to_csv(history, path_or_file, include_wall=True) -> None:
    close = False
    if isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "w", newline="")
        close = True
    else:
        f = path_or_file
    try:
        w = csv.writer(f)
        n_x = history[0].terminal_state.shape[0] if history else 0
        header = ["iter", "J", "theta", "psi", "k", "l", "Q"]
        header += [f"x{i + 1}_tf" for i in range(n_x)]
        if include_wall:
            header.append("wall_ms")
        w.writerow(header)
        for rec in history:
            row = [
                rec.iteration,
                repr(float(rec.cost)),
                repr(float(rec.theta)),
                "unconstrained" if rec.psi is None else repr(float(rec.psi)),
                "" if rec.k_used is None else rec.k_used,
                "" if rec.l_used is None else rec.l_used,
                "" if rec.q_value is None else repr(float(rec.q_value)),
            ]
            row += [repr(float(v)) for v in rec.terminal_state]
            if include_wall:
                row.append(f"{rec.wall_ms:.3f}")
            w.writerow(row)
    finally:
        if close:
            f.close()
