"""Experiment: projected-gradient inner step instead of vertex slam."""
import sys
import numpy as np
import switchopt as so
from switchopt.adjoint import cell_mode_integrals, integrate_costate, optimality_theta
from switchopt.solver import SolverConfig


def proj_simplex_rows(c):
    """Euclidean projection of each row onto the probability simplex."""
    n = c.shape[1]
    a = -np.sort(-c, axis=1)
    csum = (np.cumsum(a, axis=1) - 1.0) / np.arange(1, n + 1)
    k = np.sum(a > csum, axis=1) - 1
    tau = csum[np.arange(c.shape[0]), k]
    return np.maximum(c - tau[:, None], 0.0)


def pg_step(problem, s, cfg, x0, rho):
    traj = so.simulate(problem, s, x0, cfg.substeps)
    j0 = so.cost_J(problem, traj)
    costate = integrate_costate(problem, traj, s)
    w = cell_mode_integrals(problem, traj, costate, s)
    theta, _ = optimality_theta(problem, s, x0, cfg.substeps, traj=traj)
    gdens = w / s.grid.widths[:, None]
    target_d = proj_simplex_rows(s.d - rho * gdens)
    target = so.RelaxedSignal(s.grid, target_d / target_d.sum(axis=1, keepdims=True), s.u)
    slope = float(np.sum((target.d - s.d) * w))
    if slope >= 0.0:
        return s, theta, 0.0, j0, j0, True
    lam = 1.0
    while lam >= 1e-12:
        cand = so.convex_combine(s, target, lam)
        jc = so.cost_J(problem, so.simulate(problem, cand, x0, cfg.substeps))
        if jc - j0 <= cfg.armijo_alpha * lam * slope:
            return cand, theta, lam, j0, jc, False
        lam *= cfg.armijo_beta
    return s, theta, 0.0, j0, j0, True


rho = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
nsteps = int(sys.argv[2]) if len(sys.argv) > 2 else 80
p = so.paper_example()
g = so.Grid.uniform(2.0, 256)
s = so.resample(so.initial_signal_paper(g), g)
x0 = np.array([0.0, 0.0])
cfg = SolverConfig()

print(f"=== projected gradient, rho={rho} ===")
for it in range(nsteps):
    s2, theta, lam, j0, j1, noprog = pg_step(p, s, cfg, x0, rho)
    traj = so.simulate(p, s2, x0, 4)
    xt = traj.terminal_state
    if it % 2 == 0 or noprog or it < 12:
        print(
            f"{it:3d} theta={theta:12.6f} lam={lam:10.2e} J={j1:10.6f} "
            f"xt=({xt[0]:8.5f},{xt[1]:8.5f}) noprog={noprog}"
        )
    if noprog:
        break
    s = s2
