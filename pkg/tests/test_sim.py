import dataclasses
import io
import math

import numpy as np
import pytest

from switchopt import (
    Grid,
    GridMismatchError,
    IntegrationBlowupError,
    RelaxedSignal,
    compare_P,
    cost_J,
    paper_example,
    psi,
    simulate,
    vertex_signal,
)
from switchopt.sim import Trajectory, trajectory_to_csv
from switchopt.model import SwitchedProblem, distance_cost

X0 = np.array([0.0, 0.0])


def mode_signal(n, mode, n_cells=64):
    return vertex_signal(Grid.uniform(2.0, n_cells), [mode] * n_cells, n)


def simulate_by_modes(problem, s, x0, substeps):
    """Independent oracle: per-cell single-mode RK4, no weighting path."""
    x = np.array(x0, dtype=float)
    modes = np.argmax(s.d, axis=1)
    states = [x]
    b = s.grid.boundaries
    for c in range(s.grid.n_cells):
        f = problem.modes[modes[c]]
        u = s.u[c] if problem.n_u else None
        h = (b[c + 1] - b[c]) / substeps
        for j in range(substeps):
            t = b[c] + j * h
            k1 = f(t, x, u)
            k2 = f(t + 0.5 * h, x + 0.5 * h * k1, u)
            k3 = f(t + 0.5 * h, x + 0.5 * h * k2, u)
            k4 = f(t + h, x + h * k3, u)
            x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            states.append(x)
    return np.array(states)


class TestSimulate:
    def test_mode1_analytic_terminal(self):
        p = paper_example()
        traj = simulate(p, mode_signal(2, 0), X0)
        np.testing.assert_allclose(traj.terminal_state, [4.0, 0.0], atol=1e-9)

    def test_mode2_fixed_point(self):
        p = paper_example()
        traj = simulate(p, mode_signal(2, 1), X0)
        np.testing.assert_allclose(traj.terminal_state, [0.0, 0.0], atol=1e-12)

    def test_mixed_matches_fine_reference(self):
        p = paper_example()
        g = Grid.uniform(2.0, 256)
        s = RelaxedSignal(g, np.tile([0.5, 0.5], (256, 1)))
        coarse = simulate(p, s, X0, substeps=4)
        fine = simulate(p, s, X0, substeps=40)
        assert np.linalg.norm(coarse.terminal_state - fine.terminal_state) <= 1e-6

    def test_sample_count_and_initial_state(self):
        p = paper_example()
        traj = simulate(p, mode_signal(2, 0, n_cells=16), X0, substeps=3)
        assert traj.n_samples == 16 * 3 + 1
        np.testing.assert_array_equal(traj.states[0], X0)
        assert traj.times[0] == 0.0 and traj.times[-1] == 2.0

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_blowup_names_cell(self):
        bad = SwitchedProblem(
            n_x=1,
            n_sigma=1,
            n_u=0,
            t_f=2.0,
            modes=(lambda t, x, u: np.array([x[0] ** 3]),),
            mode_jacobians=(lambda t, x, u: np.array([[3.0 * x[0] ** 2]]),),
            cost=lambda x: float(x[0]),
            cost_gradient=lambda x: np.array([1.0]),
        )
        s = vertex_signal(Grid.uniform(2.0, 16), [0] * 16, 1)
        with pytest.raises(IntegrationBlowupError) as err:
            simulate(bad, s, np.array([3.0]))
        assert err.value.cell >= 0

    def test_horizon_mismatch(self):
        p = paper_example()
        s = vertex_signal(Grid.uniform(1.0, 8), [0] * 8, 2)
        with pytest.raises(GridMismatchError):
            simulate(p, s, X0)

    def test_pure_relaxed_equivalence(self):
        p = paper_example()
        rng = np.random.default_rng(17)
        g = Grid.uniform(2.0, 32)
        for _ in range(5):
            s = vertex_signal(g, rng.integers(0, 2, size=32), 2)
            traj = simulate(p, s, X0, substeps=4)
            direct = simulate_by_modes(p, s, X0, substeps=4)
            assert float(np.max(np.abs(traj.states - direct))) <= 1e-12

    def test_rk4_order_of_accuracy(self):
        # confined to x1 in (0,1), x2 in (1,2): the smooth nonlinear branch
        p = paper_example()
        g = Grid.uniform(2.0, 8)
        s = RelaxedSignal(g, np.tile([0.08, 0.92], (8, 1)))
        x0 = np.array([0.02, 1.1])
        ref = simulate(p, s, x0, substeps=64).terminal_state
        errs = [
            np.linalg.norm(simulate(p, s, x0, substeps=m).terminal_state - ref)
            for m in (1, 2, 4, 8, 16)
        ]
        for a, b in zip(errs, errs[1:]):
            assert 8.0 <= a / b <= 32.0


class TestCostJ:
    def test_terminal_examples(self):
        p = paper_example()
        traj = simulate(p, mode_signal(2, 0), X0)
        assert cost_J(p, traj) == pytest.approx(math.sqrt(5.0), abs=1e-9)

    def test_one_switch_lands_on_b(self):
        # mode 1 on [0, 1.5], mode 2 after: terminal (3, 1), cost exactly 1
        p = paper_example()
        g = Grid.uniform(2.0, 64)
        modes = [0 if (i + 0.5) / 32.0 <= 1.5 else 1 for i in range(64)]
        traj = simulate(p, vertex_signal(g, modes, 2), X0)
        np.testing.assert_allclose(traj.terminal_state, [3.0, 1.0], atol=1e-9)
        assert cost_J(p, traj) == pytest.approx(1.0, abs=1e-9)

    def test_at_target(self):
        p = paper_example()
        g = Grid.uniform(2.0, 8)
        s = vertex_signal(g, [0] * 8, 2)
        traj = simulate(p, s, X0)
        fake = Trajectory(
            grid=traj.grid,
            substeps=traj.substeps,
            times=traj.times,
            states=np.tile([3.0, 2.0], (traj.n_samples, 1)),
            signal=s,
        )
        assert cost_J(p, fake) == 0.0


def constant_trajectory(problem, value, n_cells=4):
    g = Grid.uniform(problem.t_f, n_cells)
    s = vertex_signal(g, [0] * n_cells, problem.n_sigma)
    times = np.linspace(0.0, problem.t_f, n_cells + 1)
    states = np.tile(value, (n_cells + 1, 1))
    return Trajectory(grid=g, substeps=1, times=times, states=states, signal=s)


class TestPsi:
    def test_unconstrained_is_none(self):
        p = paper_example()
        traj = simulate(p, mode_signal(2, 0, n_cells=8), X0)
        assert psi(p, traj) is None

    def test_max_over_samples(self):
        p = dataclasses.replace(
            paper_example(), constraints=(lambda x: x[0] - 3.0,)
        )
        traj = simulate(p, mode_signal(2, 0), X0)
        assert psi(p, traj) == pytest.approx(1.0, abs=1e-9)

    def test_inactive_constraint(self):
        p = dataclasses.replace(
            paper_example(), constraints=(lambda x: x[0] - 10.0,)
        )
        traj = simulate(p, mode_signal(2, 0), X0)
        assert psi(p, traj) == pytest.approx(-6.0, abs=1e-9)


class TestCompareP:
    def make_constrained(self):
        cost, grad = distance_cost((0.0, 0.0))
        return SwitchedProblem(
            n_x=2,
            n_sigma=1,
            n_u=0,
            t_f=1.0,
            modes=(lambda t, x, u: np.zeros(2),),
            mode_jacobians=(lambda t, x, u: np.zeros((2, 2)),),
            cost=lambda x: float(x[0]),
            cost_gradient=lambda x: np.array([1.0, 0.0]),
            constraints=(lambda x: float(x[1]),),
        )

    def test_unconstrained_difference(self):
        p = paper_example()
        t1 = constant_trajectory(p, [5.0, 2.0])  # J = ||(2,0)|| = 2
        t2 = constant_trajectory(p, [3.0, 3.0])  # J = 1
        assert compare_P(p, t1, t2) == pytest.approx(-1.0, abs=1e-12)

    def test_feasible_branch(self):
        p = self.make_constrained()
        # J = x1, psi = x2
        t1 = constant_trajectory(p, [0.5, -0.5])
        t2 = constant_trajectory(p, [0.2, -0.1])
        assert compare_P(p, t1, t2) == pytest.approx(-0.1, abs=1e-12)

    def test_infeasible_branch(self):
        p = self.make_constrained()
        t1 = constant_trajectory(p, [0.0, 0.4])
        t2 = constant_trajectory(p, [9.0, 0.1])
        assert compare_P(p, t1, t2) == pytest.approx(-0.3, abs=1e-12)

    def test_reflexive(self):
        p = paper_example()
        t1 = constant_trajectory(p, [1.0, 1.0])
        assert compare_P(p, t1, t1) == 0.0
        q = self.make_constrained()
        t2 = constant_trajectory(q, [1.0, -1.0])
        assert compare_P(q, t2, t2) <= 0.0


def test_trajectory_csv():
    p = paper_example()
    traj = simulate(p, mode_signal(2, 0, n_cells=4), X0, substeps=1)
    buf = io.StringIO()
    trajectory_to_csv(traj, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "t,x_1,x_2"
    assert len(lines) == traj.n_samples + 1
