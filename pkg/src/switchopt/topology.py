"""Weak-topology image maps and the distances they induce.

The solver can measure closeness of switching inputs either through the
terminal state they produce or through the whole sampled state path.  The
choice decides which controls count as "nearby" and therefore where the
outer iteration is allowed to settle.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import GridMismatchError


class TopologyKind(enum.Enum):
    """Which image map induces the topology on the control space."""

    TERMINAL_STATE = "terminal"
    FULL_TRAJECTORY = "trajectory"

    @classmethod
    def from_string(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown topology {text!r}; use 'terminal' or 'trajectory'"
            ) from None


class SampledPath(NamedTuple):
    """A full sampled state path, the image point in path space."""

    times: np.ndarray
    states: np.ndarray


def g_image(kind, traj):
    """Image of a trajectory under the topology's defining map.

    TERMINAL_STATE maps to the final state vector; FULL_TRAJECTORY maps to
    the full sampled path.
    """
    if kind is TopologyKind.TERMINAL_STATE:
        return traj.terminal_state
    if kind is TopologyKind.FULL_TRAJECTORY:
        return SampledPath(traj.times, traj.states)
    raise TypeError(f"unknown topology kind {kind!r}")


def _trapezoid_weights(times):
    w = np.empty_like(times)
    w[0] = 0.5 * (times[1] - times[0])
    w[-1] = 0.5 * (times[-1] - times[-2])
    w[1:-1] = 0.5 * (times[2:] - times[:-2])
    return w


def topo_distance(kind, traj_a, traj_b) -> float:
    """Distance of two trajectories in the topology's image space.

    TERMINAL_STATE: Euclidean distance of the final states (a pseudometric,
    degenerate for paths agreeing only at t_f).  FULL_TRAJECTORY: discrete
    L2 distance of the sampled paths; requires identical sampling layouts.
    """
    if kind is TopologyKind.TERMINAL_STATE:
        return float(np.linalg.norm(traj_a.terminal_state - traj_b.terminal_state))
    if kind is TopologyKind.FULL_TRAJECTORY:
        if not np.array_equal(traj_a.times, traj_b.times):
            raise GridMismatchError(
                "full-trajectory distance needs identical sampling layouts"
            )
        diff = traj_a.states - traj_b.states
        sq = np.sum(diff * diff, axis=1)
        return float(np.sqrt(np.sum(_trapezoid_weights(traj_a.times) * sq)))
    raise TypeError(f"unknown topology kind {kind!r}")
