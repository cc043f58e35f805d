import dataclasses
import math

import numpy as np
import pytest

from switchopt import (
    Grid,
    PureSignal,
    RelaxedSignal,
    cost_J,
    directional_derivative_J,
    integrate_costate,
    optimality_theta,
    paper_example,
    simulate,
    theta_is_valid_certificates,
    vertex_signal,
)
from switchopt.adjoint import cell_mode_integrals
from switchopt.errors import DimensionError
from switchopt.model import SwitchedProblem, zero_cost
from switchopt.signal import SignalDirection, initial_signal_paper

X0 = np.array([0.0, 0.0])


def zero_cost_benchmark():
    cost, grad = zero_cost()
    return dataclasses.replace(paper_example(), cost=cost, cost_gradient=grad)


def lattice_signal(grid, seed_offset=0):
    """Deterministic fractional signal from a golden-ratio lattice."""
    phi = 0.6180339887498949
    n = grid.n_cells
    d1 = np.array([(0.05 + 0.9 * (((i + 1 + seed_offset) * phi) % 1.0)) for i in range(n)])
    d = np.column_stack([d1, 1.0 - d1])
    return RelaxedSignal(grid, d)


class TestCostate:
    def test_terminal_condition(self):
        p = paper_example()
        s = initial_signal_paper(Grid.uniform(2.0, 64))
        traj = simulate(p, s, X0)
        costate = integrate_costate(p, traj, s)
        expected = p.cost_gradient(traj.terminal_state)
        assert float(np.max(np.abs(costate.terminal_costate - expected))) <= 1e-12

    def test_zero_cost_gives_zero_costate(self):
        p = zero_cost_benchmark()
        s = lattice_signal(Grid.uniform(2.0, 32))
        traj = simulate(p, s, X0)
        costate = integrate_costate(p, traj, s)
        assert float(np.max(np.abs(costate.costates))) == 0.0

    def test_frozen_mode2_analytic(self):
        # state parked at the origin: nilpotent constant Jacobian, the
        # backward pass must match the closed form to machine precision
        p = paper_example()
        g = Grid.uniform(2.0, 64)
        s = vertex_signal(g, [1] * 64, 2)
        traj = simulate(p, s, X0)
        costate = integrate_costate(p, traj, s)
        r13 = math.sqrt(13.0)
        for j in range(0, costate.times.size, 37):
            t = costate.times[j]
            p1 = (-3.0 - 4.0 * (2.0 - t)) / r13
            p2 = -2.0 / r13
            np.testing.assert_allclose(
                costate.costates[j], [p1, p2], atol=1e-8
            )

    def test_scalar_linear_system_analytic(self):
        a = 0.5
        problem = SwitchedProblem(
            n_x=1,
            n_sigma=1,
            n_u=0,
            t_f=1.0,
            modes=(lambda t, x, u: a * x,),
            mode_jacobians=(lambda t, x, u: np.array([[a]]),),
            cost=lambda x: 0.5 * float(x[0] ** 2),
            cost_gradient=lambda x: np.asarray(x, dtype=float),
        )
        g = Grid.uniform(1.0, 32)
        s = vertex_signal(g, [0] * 32, 1)
        x0 = np.array([1.3])
        traj = simulate(problem, s, x0, substeps=4)
        costate = integrate_costate(problem, traj, s)
        grad_tf = traj.terminal_state[0]
        for j in range(0, costate.times.size, 17):
            t = costate.times[j]
            expected = math.exp(a * (1.0 - t)) * grad_tf
            assert costate.costates[j, 0] == pytest.approx(expected, abs=1e-8)


class TestDirectionalDerivative:
    def test_zero_direction(self):
        p = paper_example()
        g = Grid.uniform(2.0, 32)
        s = lattice_signal(g)
        traj = simulate(p, s, X0)
        costate = integrate_costate(p, traj, s)
        eta = SignalDirection.between(s, s)
        assert directional_derivative_J(p, traj, costate, s, eta) == 0.0

    def test_linearity_in_direction(self):
        p = paper_example()
        g = Grid.uniform(2.0, 32)
        s = lattice_signal(g)
        other = lattice_signal(g, seed_offset=7)
        traj = simulate(p, s, X0)
        costate = integrate_costate(p, traj, s)
        eta = SignalDirection.between(other, s)
        dj = directional_derivative_J(p, traj, costate, s, eta)
        dj_half = directional_derivative_J(p, traj, costate, s, eta.scaled(0.5))
        assert dj_half == pytest.approx(0.5 * dj, rel=1e-12)

    def test_matches_finite_difference(self):
        p = paper_example()
        g = Grid.uniform(2.0, 64)
        for k in range(4):
            s = lattice_signal(g, seed_offset=3 * k)
            target = lattice_signal(g, seed_offset=3 * k + 50)
            traj = simulate(p, s, X0)
            costate = integrate_costate(p, traj, s)
            eta = SignalDirection.between(target, s)
            dj = directional_derivative_J(p, traj, costate, s, eta)
            j0 = cost_J(p, traj)
            lam = 1e-5
            from switchopt import convex_combine

            cand = convex_combine(s, target, lam)
            fd = (cost_J(p, simulate(p, cand, X0)) - j0) / lam
            assert abs(dj - fd) / max(1.0, abs(dj)) <= 1e-3

    def test_rejects_input_directions(self):
        box = (np.array([-1.0]), np.array([1.0]))
        problem = SwitchedProblem(
            n_x=1,
            n_sigma=1,
            n_u=1,
            t_f=1.0,
            modes=(lambda t, x, u: x + u,),
            mode_jacobians=(lambda t, x, u: np.array([[1.0]]),),
            cost=lambda x: float(x[0]),
            cost_gradient=lambda x: np.array([1.0]),
            u_box=box,
        )
        g = Grid.uniform(1.0, 4)
        s = PureSignal(g, np.ones((4, 1)), np.zeros((4, 1)))
        traj = simulate(problem, s, np.array([0.0]))
        costate = integrate_costate(problem, traj, s)
        eta = SignalDirection(g, np.zeros((4, 1)), np.full((4, 1), 0.1))
        with pytest.raises(DimensionError):
            directional_derivative_J(problem, traj, costate, s, eta)


class TestOptimalityTheta:
    def test_zero_cost_theta_exactly_zero(self):
        p = zero_cost_benchmark()
        g = Grid.uniform(2.0, 32)
        theta, direction = optimality_theta(p, lattice_signal(g), X0)
        assert theta == 0.0
        np.testing.assert_array_equal(direction.mode_indices, np.zeros(32))

    def test_nonpositive_on_lattice_signals(self):
        p = paper_example()
        g = Grid.uniform(2.0, 24)
        for k in range(20):
            theta, _ = optimality_theta(p, lattice_signal(g, seed_offset=k), X0)
            assert theta <= 1e-10

    def test_vertex_optimal_point(self):
        # theta at the argmin direction of another evaluation is zero when
        # re-evaluated on a signal whose every cell already picks the
        # minimizing vertex of its own adjoint integrals
        p = paper_example()
        g = Grid.uniform(2.0, 16)
        s = lattice_signal(g)
        _, direction = optimality_theta(p, s, X0)
        theta2, _ = optimality_theta(p, direction, X0)
        assert theta2 <= 1e-10

    def test_initial_signal_has_descent(self):
        p = paper_example()
        s0 = initial_signal_paper(Grid.uniform(2.0, 256))
        theta, _ = optimality_theta(p, s0, X0)
        assert theta < -1e-6

    def test_matches_exhaustive_over_vertex_directions(self):
        p = paper_example()
        g = Grid.uniform(2.0, 8)
        s = lattice_signal(g)
        traj = simulate(p, s, X0)
        theta, _ = optimality_theta(p, s, X0, traj=traj)
        costate = integrate_costate(p, traj, s)
        best = np.inf
        for code in range(2 ** 8):
            modes = [(code >> i) & 1 for i in range(8)]
            cand = vertex_signal(g, modes, 2)
            eta = SignalDirection.between(cand, s)
            best = min(
                best, directional_derivative_J(p, traj, costate, s, eta)
            )
        assert theta == pytest.approx(best, abs=1e-10)

    def test_direction_is_pure_and_deterministic_ties(self):
        p = zero_cost_benchmark()
        g = Grid.uniform(2.0, 12)
        _, direction = optimality_theta(p, lattice_signal(g), X0)
        assert isinstance(direction, PureSignal)
        # all integrals vanish, so the tie-break picks mode 0 everywhere
        np.testing.assert_array_equal(direction.mode_indices, np.zeros(12))


def test_certificates_pair():
    p = paper_example()
    g = Grid.uniform(2.0, 32)
    s = lattice_signal(g)
    certs = theta_is_valid_certificates(p, s, X0, k=6)
    assert certs.nonpositive
    assert certs.theta <= 1e-10
    assert certs.theta_projected <= 1e-10


def test_cell_mode_integrals_shape():
    p = paper_example()
    g = Grid.uniform(2.0, 16)
    s = lattice_signal(g)
    traj = simulate(p, s, X0)
    costate = integrate_costate(p, traj, s)
    w = cell_mode_integrals(p, traj, costate, s)
    assert w.shape == (16, 2)
