"""Forward simulation of relaxed dynamics and trajectory functionals.

The integrator is classical fixed-step RK4 with a configurable number of
substeps per control cell; the switching weights and continuous input are
held constant within each cell.  Cost, constraint, and comparison
functionals operate on the sampled trajectory.
"""

from __future__ import annotations

import csv
import dataclasses
from typing import Optional

import numpy as np

from .errors import DimensionError, GridMismatchError, IntegrationBlowupError

DEFAULT_SUBSTEPS = 4


@dataclasses.dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled state path driven by a signal.

    ``times`` and ``states`` hold one sample per substep boundary,
    ``n_cells * substeps + 1`` in total; ``states[0]`` is the initial state.
    """

    grid: "Grid"
    substeps: int
    times: np.ndarray
    states: np.ndarray
    signal: "RelaxedSignal"

    def __post_init__(self):
        for name in ("times", "states"):
            a = np.asarray(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    def same_layout(self, other) -> bool:
        return np.array_equal(self.times, other.times)


def _cell_field(problem, drow, urow):
    """Fastest evaluator of sum_i d_i f_i for one cell's constant weights."""
    active = [
        (float(drow[i]), problem.modes[i])
        for i in range(problem.n_sigma)
        if drow[i] != 0.0
    ]
    if len(active) == 1 and active[0][0] == 1.0:
        f = active[0][1]

        def field(t, x, _f=f, _u=urow):
            return np.asarray(_f(t, x, _u), dtype=float)

        return field

    def field(t, x, _active=active, _u=urow):
        acc = None
        for w, f in _active:
            v = np.asarray(f(t, x, _u), dtype=float)
            acc = w * v if acc is None else acc + w * v
        return acc

    return field


def simulate(problem, s, x0, substeps=DEFAULT_SUBSTEPS) -> Trajectory:
    """Integrate the relaxed dynamics driven by ``s`` from ``x0``.

    Raises IntegrationBlowupError (naming the cell) if the state leaves the
    finite range.
    """
    if substeps < 1:
        raise ValueError("need at least one substep per cell")
    if s.grid.t_f != problem.t_f:
        raise GridMismatchError(
            f"signal horizon {s.grid.t_f} != problem horizon {problem.t_f}"
        )
    if s.n_sigma != problem.n_sigma:
        raise DimensionError(
            f"signal has {s.n_sigma} modes, problem has {problem.n_sigma}"
        )
    if s.n_u != problem.n_u:
        raise DimensionError(f"signal has {s.n_u} inputs, problem has {problem.n_u}")
    if problem.n_u > 0 and problem.u_box is not None:
        lo, hi = problem.u_box
        if np.any(s.u < lo - 1e-9) or np.any(s.u > hi + 1e-9):
            raise ValueError("signal inputs leave the problem's input box")
    x = np.array(x0, dtype=float)
    if x.shape != (problem.n_x,):
        raise DimensionError(f"x0 has shape {x.shape}, expected ({problem.n_x},)")

    n_cells = s.grid.n_cells
    m = int(substeps)
    boundaries = s.grid.boundaries
    times = np.empty(n_cells * m + 1)
    states = np.empty((n_cells * m + 1, problem.n_x))
    times[0] = 0.0
    states[0] = x
    idx = 1
    for c in range(n_cells):
        t0 = boundaries[c]
        t1 = boundaries[c + 1]
        h = (t1 - t0) / m
        half = 0.5 * h
        sixth = h / 6.0
        field = _cell_field(problem, s.d[c], s.u[c] if problem.n_u else None)
        for j in range(m):
            t = t0 + j * h
            k1 = field(t, x)
            k2 = field(t + half, x + half * k1)
            k3 = field(t + half, x + half * k2)
            k4 = field(t + h, x + h * k3)
            x = x + sixth * (k1 + 2.0 * (k2 + k3) + k4)
            times[idx] = t1 if j == m - 1 else t0 + (j + 1) * h
            states[idx] = x
            idx += 1
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowupError(
                f"state became non-finite in cell {c} (t in [{t0}, {t1}])", cell=c
            )
    return Trajectory(grid=s.grid, substeps=m, times=times, states=states, signal=s)


def cost_J(problem, traj) -> float:
    """Terminal cost h(x(t_f)) of a completed trajectory."""
    return float(problem.cost(traj.terminal_state))


def psi(problem, traj) -> Optional[float]:
    """Max of all constraint functions over the trajectory samples.

    Returns None ("unconstrained") when the problem has no constraints;
    the sampled max is a discretization of the continuous-time sup.
    """
    if problem.unconstrained:
        return None
    worst = -np.inf
    for h_j in problem.constraints:
        for xk in traj.states:
            worst = max(worst, float(h_j(xk)))
    return worst


def compare_P(problem, traj1, traj2) -> float:
    """Progress comparison of trajectory 2 relative to trajectory 1.

    Feasible base point: max of the cost change and the constraint level of
    the second point; infeasible base point: constraint change only.  For
    unconstrained problems only the cost change remains.
    """
    j1 = cost_J(problem, traj1)
    j2 = cost_J(problem, traj2)
    if problem.unconstrained:
        return j2 - j1
    psi1 = psi(problem, traj1)
    psi2 = psi(problem, traj2)
    if psi1 <= 0.0:
        return max(j2 - j1, psi2)
    return psi2 - psi1


def trajectory_to_csv(traj, path_or_file) -> None:
    close = False
    if isinstance(path_or_file, str) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "w", newline="")
        close = True
    else:
        f = path_or_file
    try:
        w = csv.writer(f)
        n_x = traj.states.shape[1]
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(n_x)])
        for t, xk in zip(traj.times, traj.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in xk])
    finally:
        if close:
            f.close()
