"""Experiment: derivative convention at kinks vs descent behavior."""
import sys
import numpy as np
import switchopt as so
from switchopt import model
from switchopt.solver import gamma_hat_step, SolverConfig


def q1p_left(x2):
    v = float(x2)
    if v <= -1.0:
        return 0.0
    if v <= 0.0:
        return 2.0
    if v <= 0.5:
        return -4.0
    if v <= 1.0:
        return 4.0
    if v <= 2.0:
        return 4.0 / (3.0 - v) ** 2
    return 0.0


def q2p_left(x1):
    v = float(x1)
    if v <= 0.0:
        return 0.0
    if v <= 1.0:
        return 2.0
    if v <= 2.0:
        return -2.0
    if v <= 3.0:
        return 2.0
    if v <= 4.0:
        return -2.0
    return 0.0


def q1p_mid(x2):
    v = float(x2)
    knots = {-1.0: 1.0, 0.0: -1.0, 0.5: 0.0, 1.0: 2.5, 2.0: 2.0}
    if v in knots:
        return knots[v]
    return model.eval_q1_prime(v)


def q2p_mid(x1):
    v = float(x1)
    knots = {0.0: 1.0, 1.0: 0.0, 2.0: 0.0, 3.0: 0.0, 4.0: -1.0}
    if v in knots:
        return knots[v]
    return model.eval_q2_prime(v)


def build(conv):
    if conv == "right":
        j1, j2 = model.eval_q1_prime, model.eval_q2_prime
    elif conv == "left":
        j1, j2 = q1p_left, q2p_left
    else:
        j1, j2 = q1p_mid, q2p_mid
    base = so.paper_example()
    m1j = lambda t, x, u: np.array([[0.0, j1(x[1])], [0.0, 0.0]])
    m2j = lambda t, x, u: np.array([[0.0, 0.0], [j2(x[0]), 0.0]])
    import dataclasses
    return dataclasses.replace(base, mode_jacobians=(m1j, m2j))


conv = sys.argv[1] if len(sys.argv) > 1 else "right"
nsteps = int(sys.argv[2]) if len(sys.argv) > 2 else 40
p = build(conv)
g = so.Grid.uniform(2.0, 256)
s = so.resample(so.initial_signal_paper(g), g)
x0 = np.array([0.0, 0.0])
cfg = SolverConfig()

print(f"=== convention: {conv} ===")
for it in range(nsteps):
    step = gamma_hat_step(p, s, cfg, x0)
    traj = so.simulate(p, step.signal, x0, 4)
    xt = traj.terminal_state
    print(
        f"{it:3d} theta={step.theta:12.6f} lam={step.step_length:10.2e} "
        f"J={step.j_after:10.6f} xt=({xt[0]:8.5f},{xt[1]:8.5f}) noprog={step.no_progress}"
    )
    if step.no_progress:
        break
    s = step.signal
