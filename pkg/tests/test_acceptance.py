"""Release gates: every criterion as one test with its stated tolerance.

The heavy benchmark runs are shared through the verification module's
cache, so the two solver runs happen once per session.  Each test prints
one pass/fail line for its criterion.
"""

import numpy as np
import pytest

from switchopt import TopologyKind, optimality_theta, verification


def _report(result):
    print(f"{'PASS' if result.passed else 'FAIL'}  {result.name}: {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_model_sanity():
    _report(verification.check_model_sanity())


def test_fig3_terminal_topology_reproduction():
    _report(verification.check_fig3_terminal_topology())


def test_fig2_trajectory_topology_surrogate():
    _report(verification.check_fig2_trajectory_topology())


def test_optimality_function_validity():
    _report(verification.check_theta_validity())


def test_gradient_oracle():
    _report(verification.check_gradient_oracle())


def test_exhaustive_theta_oracle():
    _report(verification.check_exhaustive_theta())


def test_projection_exactness():
    _report(verification.check_projection_exactness())


def test_pure_relaxed_simulation_equivalence():
    _report(verification.check_pure_relaxed_equivalence())


def test_oracle_polish_monotonicity():
    _report(verification.check_oracle_polish())


def test_framework_condition_telemetry():
    _report(verification.check_framework_telemetry())


def test_determinism_byte_identical_artifacts():
    _report(verification.check_determinism())


def test_stationarity_transfer_between_topologies():
    # the trajectory-topology solution, re-evaluated with the optimality
    # function, still certifies descent for the terminal-state machinery
    result, _, cfg = verification.benchmark_run(TopologyKind.FULL_TRAJECTORY)
    theta, _ = optimality_theta(
        verification.paper_example(),
        result.signal,
        verification.X0,
        substeps=cfg.substeps,
    )
    print(f"trajectory-topology solution re-evaluated: theta={theta:.3e}")
    assert theta < -cfg.epsilon


def test_theta_limsup_at_stationary_termination():
    from switchopt import SolveStatus

    for topology in TopologyKind:
        result, _, cfg = verification.benchmark_run(topology)
        if result.status is SolveStatus.STATIONARY:
            tail = [r.theta for r in result.history[-10:]]
            assert max(tail) >= -10.0 * cfg.epsilon
