"""Switched-system problem definitions.

A problem bundles the mode vector fields f_i(t, x, u), their state
Jacobians, a terminal cost with gradient, and optional state-constraint
functions h_j(x) <= 0.  Instances are immutable and safe to share across
concurrent evaluations.

The built-in registry ships the two-mode planar benchmark under the key
``"paper_example"``; declarative piecewise-affine problems can be loaded
from config files (see the CLI module for the schema).
"""

from __future__ import annotations

import dataclasses
import warnings
from typing import Callable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import CostKinkWarning, DimensionError, SimplexError

SIMPLEX_TOL = 1e-12

Field = Callable[[float, np.ndarray, Optional[np.ndarray]], np.ndarray]
Jacobian = Callable[[float, np.ndarray, Optional[np.ndarray]], np.ndarray]
ScalarFn = Callable[[np.ndarray], float]
GradFn = Callable[[np.ndarray], np.ndarray]


@dataclasses.dataclass(frozen=True)
class SwitchedProblem:
    """Immutable description of a switched optimal control problem.

    Attributes
    ----------
    n_x, n_sigma, n_u : int
        State dimension, mode count, continuous-input dimension (0 allowed).
    t_f : float
        Horizon length; trajectories live on [0, t_f].
    modes : tuple of callables
        Mode fields f_i(t, x, u) -> xdot, one per mode.
    mode_jacobians : tuple of callables
        State Jacobians df_i/dx(t, x, u) -> (n_x, n_x) array.
    cost : callable
        Terminal cost h(x) -> float.
    cost_gradient : callable
        Gradient of the terminal cost, grad h(x) -> (n_x,) array.
    constraints : tuple of callables
        State constraint functions h_j(x) -> float, empty when unconstrained.
    u_box : pair of arrays or None
        Componentwise (lower, upper) bounds for u; None when n_u == 0.
    name : str
        Registry name, informational.
    landmarks : mapping
        Named reference points in state space used by plotting.
    """

    n_x: int
    n_sigma: int
    n_u: int
    t_f: float
    modes: Tuple[Field, ...]
    mode_jacobians: Tuple[Jacobian, ...]
    cost: ScalarFn
    cost_gradient: GradFn
    constraints: Tuple[ScalarFn, ...] = ()
    u_box: Optional[Tuple[np.ndarray, np.ndarray]] = None
    name: str = ""
    landmarks: Mapping[str, np.ndarray] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.n_sigma < 1 or self.n_x < 1 or self.n_u < 0:
            raise DimensionError("need n_sigma >= 1, n_x >= 1, n_u >= 0")
        if not self.t_f > 0:
            raise ValueError(f"horizon t_f must be positive, got {self.t_f}")
        if len(self.modes) != self.n_sigma or len(self.mode_jacobians) != self.n_sigma:
            raise DimensionError("need one field and one Jacobian per mode")

    @property
    def unconstrained(self) -> bool:
        return len(self.constraints) == 0


def check_simplex(d, n_sigma=None, tol=SIMPLEX_TOL):
    """Validate a switching-weight vector and return it as a float array.

    The entries must lie in [0, 1] and sum to 1, both within ``tol``.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 1:
        raise SimplexError(f"weight vector must be 1-D, got shape {d.shape}")
    if n_sigma is not None and d.shape[0] != n_sigma:
        raise DimensionError(f"expected {n_sigma} weights, got {d.shape[0]}")
    if abs(float(d.sum()) - 1.0) > tol:
        raise SimplexError(f"weights sum to {d.sum()!r}, not 1 within {tol}")
    if float(d.min()) < -tol or float(d.max()) > 1.0 + tol:
        raise SimplexError(f"weights {d!r} leave [0, 1] by more than {tol}")
    return d


def eval_relaxed_field(problem, t, x, u, d):
    """Evaluate the relaxed vector field sum_i d_i f_i(t, x, u)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n_x,):
        raise DimensionError(f"state has shape {x.shape}, expected ({problem.n_x},)")
    if problem.n_u > 0:
        u = np.asarray(u, dtype=float)
        if u.shape != (problem.n_u,):
            raise DimensionError(f"input has shape {u.shape}, expected ({problem.n_u},)")
    d = check_simplex(d, problem.n_sigma)
    out = np.zeros(problem.n_x)
    for i in range(problem.n_sigma):
        w = d[i]
        if w != 0.0:
            out += w * np.asarray(problem.modes[i](t, x, u), dtype=float)
    return out


def eval_cost_gradient(problem, x):
    """Gradient of the terminal cost at ``x`` (delegates to the problem)."""
    return np.asarray(problem.cost_gradient(np.asarray(x, dtype=float)), dtype=float)


# ---------------------------------------------------------------------------
# Cost factories
# ---------------------------------------------------------------------------

def distance_cost(target):
    """Terminal cost h(x) = ||x - target||_2 with its gradient.

    The gradient at the kink x == target is declared to be the zero vector;
    a CostKinkWarning flags the evaluation (the cost is globally optimal
    there, so no descent direction is lost).
    """
    target = np.asarray(target, dtype=float)

    def cost(x):
        return float(np.linalg.norm(np.asarray(x, dtype=float) - target))

    def grad(x):
        r = np.asarray(x, dtype=float) - target
        n = float(np.linalg.norm(r))
        if n == 0.0:
            warnings.warn(
                "cost gradient requested at the norm kink; returning 0",
                CostKinkWarning,
                stacklevel=2,
            )
            return np.zeros_like(r)
        return r / n

    return cost, grad


def quadratic_cost(target=None):
    """Terminal cost h(x) = ||x - target||^2 / 2 with gradient x - target."""

    def cost(x):
        r = np.asarray(x, dtype=float)
        if target is not None:
            r = r - target
        return 0.5 * float(r @ r)

    def grad(x):
        r = np.asarray(x, dtype=float)
        if target is not None:
            r = r - target
        return r

    return cost, grad


def zero_cost():
    """Identically-zero terminal cost (useful for stationarity checks)."""
    return (lambda x: 0.0), (lambda x: np.zeros(np.asarray(x).shape[0]))


# ---------------------------------------------------------------------------
# Piecewise-linear scalar functions (right-derivative convention)
# ---------------------------------------------------------------------------

class PiecewiseLinear:
    """Continuous piecewise-linear function with constant extension.

    Defined by knots (xs[i], ys[i]); values are interpolated between knots
    and held constant outside [xs[0], xs[-1]].  The derivative uses the
    right-hand convention: at a knot it is the slope of the segment to the
    right (0 beyond the last knot).
    """

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ValueError("need matching 1-D knot arrays with >= 2 points")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("knot abscissae must be strictly increasing")
        self.xs = xs
        self.ys = ys
        self.slopes = np.diff(ys) / np.diff(xs)

    def __call__(self, v):
        i = int(np.searchsorted(self.xs, v, side="right")) - 1
        if i < 0:
            return float(self.ys[0])
        if i >= self.xs.size - 1:
            return float(self.ys[-1])
        return float(self.ys[i] + self.slopes[i] * (v - self.xs[i]))

    def derivative(self, v):
        i = int(np.searchsorted(self.xs, v, side="right")) - 1
        if i < 0 or i >= self.xs.size - 1:
            return 0.0
        return float(self.slopes[i])


# ---------------------------------------------------------------------------
# Built-in two-mode planar benchmark
# ---------------------------------------------------------------------------

# Branch breakpoints of the two rate functions, used by continuity checks.
Q1_BREAKPOINTS = (-1.0, 0.0, 0.5, 1.0, 2.0)
Q2_BREAKPOINTS = (0.0, 1.0, 2.0, 3.0, 4.0)


def eval_q1(x2):
    """Rightward rate of mode 1 as a function of x2 (continuous, total)."""
    v = float(x2)
    if v <= -1.0:
        return 0.0
    if v < 0.0:
        return 2.0 * v + 2.0
    if v < 0.5:
        return -4.0 * v + 2.0
    if v < 1.0:
        return 4.0 * v - 2.0
    if v <= 2.0:
        return 4.0 / (3.0 - v)
    return 4.0


def eval_q1_prime(x2):
    """Right-hand derivative of eval_q1."""
    v = float(x2)
    if v < -1.0:
        return 0.0
    if v < 0.0:
        return 2.0
    if v < 0.5:
        return -4.0
    if v < 1.0:
        return 4.0
    if v < 2.0:
        return 4.0 / (3.0 - v) ** 2
    return 0.0


def eval_q2(x1):
    """Upward rate of mode 2 as a function of x1 (continuous, total)."""
    v = float(x1)
    if v <= 0.0:
        return 0.0
    if v < 1.0:
        return 2.0 * v
    if v < 2.0:
        return -2.0 * v + 4.0
    if v < 3.0:
        return 2.0 * v - 4.0
    if v <= 4.0:
        return -2.0 * v + 8.0
    return 0.0


def eval_q2_prime(x1):
    """Right-hand derivative of eval_q2."""
    v = float(x1)
    if v < 0.0:
        return 0.0
    if v < 1.0:
        return 2.0
    if v < 2.0:
        return -2.0
    if v < 3.0:
        return 2.0
    if v < 4.0:
        return -2.0
    return 0.0


def _mode1_field(t, x, u):
    return np.array([eval_q1(x[1]), 0.0])


def _mode1_jacobian(t, x, u):
    return np.array([[0.0, eval_q1_prime(x[1])], [0.0, 0.0]])


def _mode2_field(t, x, u):
    return np.array([0.0, eval_q2(x[0])])


def _mode2_jacobian(t, x, u):
    return np.array([[0.0, 0.0], [eval_q2_prime(x[0]), 0.0]])


def paper_example():
    """The built-in two-mode planar benchmark.

    Mode 1 drives x1 rightward at rate q1(x2); mode 2 drives x2 upward at
    rate q2(x1).  The terminal cost is the Euclidean distance of x(t_f) to
    the target A = (3, 2) over the horizon [0, 2]; there is no continuous
    input and no state constraint.  The landmark B = (3, 1) is the terminal
    state of the one-switch local solution.
    """
    cost, grad = distance_cost((3.0, 2.0))
    return SwitchedProblem(
        n_x=2,
        n_sigma=2,
        n_u=0,
        t_f=2.0,
        modes=(_mode1_field, _mode2_field),
        mode_jacobians=(_mode1_jacobian, _mode2_jacobian),
        cost=cost,
        cost_gradient=grad,
        name="paper_example",
        landmarks={"A": np.array([3.0, 2.0]), "B": np.array([3.0, 1.0])},
    )


# ---------------------------------------------------------------------------
# Declarative piecewise-affine problem construction
# ---------------------------------------------------------------------------

def affine_component(coeffs, offset):
    """Field component a.x + b with constant gradient row a."""
    coeffs = np.asarray(coeffs, dtype=float)

    def value(x):
        return float(coeffs @ x) + offset

    def grad_row(x):
        return coeffs

    return value, grad_row


def const_component(c, n_x):
    zero = np.zeros(n_x)
    return (lambda x: float(c)), (lambda x: zero)


def pwl_component(var_index, points, n_x):
    """Field component g(x[var_index]) for a piecewise-linear g."""
    pwl = PiecewiseLinear([p[0] for p in points], [p[1] for p in points])

    def value(x):
        return pwl(x[var_index])

    def grad_row(x):
        row = np.zeros(n_x)
        row[var_index] = pwl.derivative(x[var_index])
        return row

    return value, grad_row


def assemble_mode(components):
    """Build (field, jacobian) callables from per-component (value, grad) pairs."""

    def field(t, x, u):
        return np.array([value(x) for value, _ in components])

    def jacobian(t, x, u):
        return np.array([grad(x) for _, grad in components])

    return field, jacobian


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_REGISTRY: dict = {"paper_example": paper_example}


def register_problem(name, factory):
    _REGISTRY[name] = factory


def problem_names():
    return sorted(_REGISTRY)


def get_problem(name):
    """Instantiate a registered problem by name."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; registered: {', '.join(problem_names())}"
        ) from None
    return factory()


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def check_mode_jacobians(problem, box_lo, box_hi, n_points=100, step=1e-4, tol=1e-5):
    """Compare each mode Jacobian against central differences of the field.

    Probe states are taken from a deterministic golden-ratio lattice inside
    the box; returns the worst absolute deviation.  Raises AssertionError
    when the deviation exceeds ``tol``.
    """
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)
    phi = 0.6180339887498949
    worst = 0.0
    u = None
    if problem.n_u > 0:
        u = 0.5 * (problem.u_box[0] + problem.u_box[1])
    for m in range(n_points):
        frac = np.array(
            [((m + 1) * (j + 1) * phi) % 1.0 for j in range(problem.n_x + 1)]
        )
        t = frac[-1] * problem.t_f
        x = box_lo + frac[: problem.n_x] * (box_hi - box_lo)
        for i in range(problem.n_sigma):
            jac = np.asarray(problem.mode_jacobians[i](t, x, u), dtype=float)
            fd = np.zeros_like(jac)
            for j in range(problem.n_x):
                e = np.zeros(problem.n_x)
                e[j] = step
                fp = np.asarray(problem.modes[i](t, x + e, u), dtype=float)
                fm = np.asarray(problem.modes[i](t, x - e, u), dtype=float)
                fd[:, j] = (fp - fm) / (2.0 * step)
            dev = float(np.max(np.abs(jac - fd)))
            worst = max(worst, dev)
            if dev > tol:
                raise AssertionError(
                    f"mode {i} Jacobian deviates from central differences by "
                    f"{dev:.3e} at t={t:.6f}, x={x}"
                )
    return worst
