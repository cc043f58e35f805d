import numpy as np
import pytest

from switchopt import (
    AdaptKError,
    Grid,
    ProjectionResolutionError,
    PureSignal,
    RelaxedSignal,
    TopologyKind,
    adapt_k,
    is_pure,
    paper_example,
    project_Rk,
    projection_error,
    vertex_signal,
)
from switchopt.solver import SolverConfig

X0 = np.array([0.0, 0.0])


def const_signal(n_cells, row, t_f=2.0):
    g = Grid.uniform(t_f, n_cells)
    return RelaxedSignal(g, np.tile(row, (n_cells, 1)))


def duty_integrals_on(signal, boundaries):
    """Test-side duty integrals via direct overlap sums."""
    out = np.zeros((len(boundaries) - 1, signal.n_sigma))
    src = signal.grid.boundaries
    for j in range(len(boundaries) - 1):
        a, b = boundaries[j], boundaries[j + 1]
        for c in range(signal.grid.n_cells):
            lo = max(a, src[c])
            hi = min(b, src[c + 1])
            if hi > lo:
                out[j] += (hi - lo) * signal.d[c]
    return out


class TestProjectRk:
    def test_half_duty_k1_pulses(self):
        s = const_signal(8, [0.5, 0.5])
        out = project_Rk(s, 1)
        np.testing.assert_allclose(
            out.grid.boundaries, [0.0, 0.25, 0.75, 1.0, 1.25, 1.75, 2.0]
        )
        np.testing.assert_array_equal(out.mode_indices, [1, 0, 1, 1, 0, 1])

    def test_full_duty_fills_cells(self):
        s = const_signal(8, [1.0, 0.0])
        out = project_Rk(s, 3)
        assert out.grid.n_cells == 8
        assert np.all(out.mode_indices == 0)

    def test_zero_duty(self):
        s = const_signal(8, [0.0, 1.0])
        out = project_Rk(s, 2)
        assert np.all(out.mode_indices == 1)

    def test_aligned_pure_projects_to_itself(self):
        g = Grid.uniform(2.0, 8)
        s = vertex_signal(g, [0, 1, 1, 0, 0, 0, 1, 0], 2)
        out = project_Rk(s, 3)
        np.testing.assert_array_equal(out.grid.boundaries, g.boundaries)
        np.testing.assert_array_equal(out.d, s.d)

    def test_duty_cycle_preserved(self):
        rng = np.random.default_rng(31)
        for k in (2, 4, 6):
            boundaries = np.linspace(0.0, 2.0, 2 ** k + 1)
            for trial in range(5):
                raw = rng.uniform(0.0, 1.0, size=(48, 2))
                s = RelaxedSignal(
                    Grid.uniform(2.0, 48), raw / raw.sum(axis=1, keepdims=True)
                )
                out = project_Rk(s, k)
                want = duty_integrals_on(s, boundaries)
                got = duty_integrals_on(out, boundaries)
                assert float(np.max(np.abs(want - got))) <= 1e-12

    def test_output_is_pure(self):
        s = const_signal(16, [0.37, 0.63])
        out = project_Rk(s, 4)
        assert isinstance(out, PureSignal)
        assert is_pure(out, 1e-12)

    def test_idempotent_on_aligned_pure(self):
        g = Grid.uniform(2.0, 16)
        s = vertex_signal(g, [0, 1] * 8, 2)
        once = project_Rk(s, 4)
        twice = project_Rk(once, 4)
        np.testing.assert_array_equal(once.grid.boundaries, twice.grid.boundaries)
        np.testing.assert_array_equal(once.d, twice.d)

    def test_three_modes_sequential(self):
        g = Grid.uniform(3.0, 3)
        d = np.tile([0.5, 0.25, 0.25], (3, 1))
        s = RelaxedSignal(g, d)
        out = project_Rk(s, 1)
        # per projection cell (width 1.5): 0.75 / 0.375 / 0.375 in mode order
        np.testing.assert_allclose(
            out.grid.boundaries, [0.0, 0.75, 1.125, 1.5, 2.25, 2.625, 3.0]
        )
        np.testing.assert_array_equal(out.mode_indices, [0, 1, 2, 0, 1, 2])
        want = duty_integrals_on(s, np.array([0.0, 1.5, 3.0]))
        got = duty_integrals_on(out, np.array([0.0, 1.5, 3.0]))
        assert float(np.max(np.abs(want - got))) <= 1e-12

    def test_near_vertex_rows_snap_cleanly(self):
        g = Grid.uniform(2.0, 4)
        d = np.tile([1.0 - 1e-14, 1e-14], (4, 1))
        s = RelaxedSignal(g, d)
        out = project_Rk(s, 2)
        assert np.all(out.mode_indices == 0)

    def test_k_validation(self):
        s = const_signal(8, [0.5, 0.5])
        with pytest.raises(ValueError):
            project_Rk(s, 0)
        with pytest.raises(ProjectionResolutionError):
            project_Rk(s, 25)


class TestProjectionError:
    def test_aligned_pure_is_exact(self):
        p = paper_example()
        g = Grid.uniform(2.0, 64)
        s = vertex_signal(g, [0] * 32 + [1] * 32, 2)
        for kind in TopologyKind:
            assert projection_error(p, s, 6, kind, X0) <= 1e-9

    def test_error_decays_with_k(self):
        p = paper_example()
        rng = np.random.default_rng(41)
        for _ in range(3):
            raw = rng.uniform(0.2, 0.8, size=(16, 1))
            d = np.hstack([raw, 1.0 - raw])
            s = RelaxedSignal(Grid.uniform(2.0, 16), d)
            coarse = projection_error(
                p, s, 6, TopologyKind.FULL_TRAJECTORY, X0, substeps=2
            )
            fine = projection_error(
                p, s, 12, TopologyKind.FULL_TRAJECTORY, X0, substeps=2
            )
            assert fine < coarse
            term_coarse = projection_error(
                p, s, 6, TopologyKind.TERMINAL_STATE, X0, substeps=2
            )
            term_fine = projection_error(
                p, s, 12, TopologyKind.TERMINAL_STATE, X0, substeps=2
            )
            assert term_fine < term_coarse


class TestAdaptK:
    def test_requires_descent(self):
        p = paper_example()
        cfg = SolverConfig()
        s = const_signal(256, [0.5, 0.5])
        with pytest.raises(ValueError):
            adapt_k(p, s, 0.0, cfg, X0)

    def test_first_hit_rule(self):
        # a vertex-optimal pure signal: the inner descent returns it
        # unchanged, projection is the identity, so Q = 0 meets any
        # positive bound at k0 immediately
        p = paper_example()
        cfg = SolverConfig(n_cells=64, substeps=2, k0=6, k_max=8)
        g = Grid.uniform(2.0, 64)
        from switchopt import optimality_theta

        s0 = const_signal(64, [0.5, 0.5])
        _, direction = optimality_theta(p, s0, X0, 2)
        result = adapt_k(p, direction, -1.0, cfg, X0)
        assert result.k == 6
        assert result.q_value <= (cfg.omega - 1.0) * cfg.gamma * (-1.0)

    def test_bound_arithmetic(self):
        cfg = SolverConfig(omega=0.5, gamma=0.01)
        assert (cfg.omega - 1.0) * cfg.gamma * (-0.1) == pytest.approx(5e-4)

    def test_failure_carries_best(self):
        p = paper_example()
        cfg = SolverConfig(n_cells=64, substeps=2, k0=1, k_max=3)
        s = const_signal(64, [0.5, 0.5])
        # theta_p barely negative makes the bound unreachably tight
        with pytest.raises(AdaptKError) as err:
            adapt_k(p, s, -1e-13, cfg, X0)
        assert err.value.best_k in (1, 2, 3)
        assert set(err.value.q_values) == {1, 2, 3}
