"""Piecewise-constant control signals on time grids.

Relaxed signals carry simplex-valued switching weights (and an optional
continuous input) per grid cell; pure signals are the vertex-valued subset,
i.e. admissible switching signals of the original problem.  All values are
immutable; every operation returns a new signal.

Grids are uniform in normal solver use.  Arbitrary strictly-increasing
boundaries are supported so that projected pure signals can keep their
exact pulse edges.
"""

from __future__ import annotations

import csv
import dataclasses
import io
from typing import Optional

import numpy as np

from .errors import DimensionError, GridMismatchError, SimplexError
from .model import SIMPLEX_TOL

PURE_TOL = 1e-9

# Switch time of the benchmark initial signal: boundary 50 of a 64-cell
# grid over [0, 2].
DEFAULT_T50 = 2.0 * 49.0 / 64.0


@dataclasses.dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing cell boundaries over [0, t_f]."""

    boundaries: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        object.__setattr__(self, "boundaries", b)
        if b.ndim != 1 or b.size < 2:
            raise ValueError("grid needs at least two boundaries")
        if b[0] != 0.0:
            raise ValueError(f"grid must start at 0, got {b[0]!r}")
        if not np.all(np.diff(b) > 0.0):
            raise ValueError("grid boundaries must be strictly increasing")
        b.flags.writeable = False

    @classmethod
    def uniform(cls, t_f, n_cells):
        if n_cells < 1:
            raise ValueError("need at least one cell")
        if not t_f > 0:
            raise ValueError("horizon must be positive")
        # linspace guarantees the last boundary equals t_f exactly
        return cls(np.linspace(0.0, float(t_f), int(n_cells) + 1))

    @property
    def n_cells(self) -> int:
        return self.boundaries.size - 1

    @property
    def t_f(self) -> float:
        return float(self.boundaries[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.boundaries[:-1] + self.boundaries[1:])

    def __eq__(self, other):
        return isinstance(other, Grid) and np.array_equal(
            self.boundaries, other.boundaries
        )

    def __repr__(self):
        return f"Grid(n_cells={self.n_cells}, t_f={self.t_f})"


def _as_locked(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclasses.dataclass(frozen=True, eq=False)
class RelaxedSignal:
    """Simplex-valued switching weights (and inputs) per grid cell."""

    grid: Grid
    d: np.ndarray
    u: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != self.grid.n_cells:
            raise DimensionError(
                f"d must be ({self.grid.n_cells}, n_sigma), got {d.shape}"
            )
        u = self.u
        if u is None:
            u = np.zeros((self.grid.n_cells, 0))
        u = np.asarray(u, dtype=float)
        if u.ndim != 2 or u.shape[0] != self.grid.n_cells:
            raise DimensionError(
                f"u must be ({self.grid.n_cells}, n_u), got {u.shape}"
            )
        if not np.all(np.isfinite(d)) or not np.all(np.isfinite(u)):
            raise SimplexError("signal values must be finite")
        sums = d.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > SIMPLEX_TOL:
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise SimplexError(
                f"row {bad} weights sum to {sums[bad]!r}, not 1 within {SIMPLEX_TOL}"
            )
        if float(d.min()) < -SIMPLEX_TOL or float(d.max()) > 1.0 + SIMPLEX_TOL:
            raise SimplexError("weights leave [0, 1] beyond tolerance")
        object.__setattr__(self, "d", _as_locked(d))
        object.__setattr__(self, "u", _as_locked(u))

    @property
    def n_sigma(self) -> int:
        return self.d.shape[1]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    def rows(self) -> np.ndarray:
        """Per-cell value vectors, d and u concatenated."""
        return np.hstack([self.d, self.u])


class PureSignal(RelaxedSignal):
    """A relaxed signal whose weight rows all sit at simplex vertices."""

    def __post_init__(self):
        super().__post_init__()
        if not is_pure(self, PURE_TOL):
            raise SimplexError(
                f"signal rows are not vertex-valued within {PURE_TOL}"
            )

    @property
    def mode_indices(self) -> np.ndarray:
        """Active mode per cell (0-based)."""
        return np.argmax(self.d, axis=1)


def vertex_signal(grid, mode_indices, n_sigma, u=None) -> PureSignal:
    """Pure signal activating ``mode_indices[c]`` (0-based) in cell c."""
    idx = np.asarray(mode_indices, dtype=int)
    if idx.shape != (grid.n_cells,):
        raise DimensionError(f"need {grid.n_cells} mode indices, got {idx.shape}")
    if idx.min() < 0 or idx.max() >= n_sigma:
        raise DimensionError("mode index out of range")
    d = np.zeros((grid.n_cells, n_sigma))
    d[np.arange(grid.n_cells), idx] = 1.0
    return PureSignal(grid, d, u)


def is_pure(s, tol=PURE_TOL) -> bool:
    """True iff every weight row is within ``tol`` of a simplex vertex."""
    nearest = np.argmax(s.d, axis=1)
    resid = np.abs(s.d)
    resid[np.arange(s.d.shape[0]), nearest] = np.abs(
        s.d[np.arange(s.d.shape[0]), nearest] - 1.0
    )
    return bool(np.max(resid) <= tol)


def l2_norm(s) -> float:
    """Exact L2 norm of the piecewise-constant signal (d and u rows)."""
    rows = s.rows()
    return float(np.sqrt(np.sum(rows * rows * s.grid.widths[:, None])))


def signal_sup_distance(a, b) -> float:
    """Max over cells of the Euclidean row distance between two signals."""
    _require_same_grid(a, b)
    diff = a.rows() - b.rows()
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=1))))


def convex_combine(a, b, lam) -> RelaxedSignal:
    """Rowwise (1 - lam) * a + lam * b; stays in the simplex by convexity."""
    _require_same_grid(a, b)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    d = (1.0 - lam) * a.d + lam * b.d
    u = (1.0 - lam) * a.u + lam * b.u
    return RelaxedSignal(a.grid, d, u)


def _require_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError("signals live on different grids")


@dataclasses.dataclass(frozen=True)
class SignalDirection:
    """Difference of two relaxed signals on a shared grid.

    Weight rows sum to zero; used as the direction argument of directional
    derivatives.
    """

    grid: Grid
    d: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        d = _as_locked(self.d)
        u = _as_locked(self.u)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "u", u)
        if d.shape[0] != self.grid.n_cells or u.shape[0] != self.grid.n_cells:
            raise DimensionError("direction rows must match the grid")
        if d.size and float(np.max(np.abs(d.sum(axis=1)))) > 1e-9:
            raise DimensionError("direction weight rows must sum to 0")

    @classmethod
    def between(cls, target, base):
        """Direction target - base (both on the same grid)."""
        _require_same_grid(target, base)
        return cls(base.grid, target.d - base.d, target.u - base.u)

    def scaled(self, alpha):
        return SignalDirection(self.grid, alpha * self.d, alpha * self.u)


def initial_signal_paper(grid, t50=DEFAULT_T50) -> PureSignal:
    """Benchmark initial signal: mode 1 on [0, t50], mode 2 afterwards.

    Cells are assigned by midpoint.  The grid must span [0, 2] with at
    least 64 cells.
    """
    if grid.t_f != 2.0:
        raise ValueError(f"initial signal is defined on [0, 2], grid ends at {grid.t_f}")
    if grid.n_cells < 64:
        raise ValueError(f"need at least 64 cells, got {grid.n_cells}")
    modes = np.where(grid.midpoints <= t50, 0, 1)
    return vertex_signal(grid, modes, n_sigma=2)


def merge_boundaries(a, b, tol=1e-12) -> np.ndarray:
    """Union of two boundary arrays with near-duplicates collapsed.

    Boundaries closer than ``tol`` to the previously kept one are dropped
    (the final endpoint always survives), so downstream grids never carry
    sliver cells.
    """
    merged = np.union1d(a, b)
    kept = [merged[0]]
    for v in merged[1:-1]:
        if v - kept[-1] >= tol and merged[-1] - v >= tol:
            kept.append(v)
    kept.append(merged[-1])
    return np.asarray(kept)


def resample(s, grid) -> RelaxedSignal:
    """Re-sample a signal onto another grid by per-cell duty-cycle averaging.

    Exact (row-copying) when the target grid refines the source grid.  Both
    grids must span the same horizon.
    """
    src = s.grid.boundaries
    dst = grid.boundaries
    if src[0] != dst[0] or src[-1] != dst[-1]:
        raise GridMismatchError("grids span different horizons")
    merged = np.union1d(src, dst)
    mids = 0.5 * (merged[:-1] + merged[1:])
    lengths = np.diff(merged)
    src_idx = np.clip(np.searchsorted(src, mids, side="right") - 1, 0, s.grid.n_cells - 1)
    dst_idx = np.clip(np.searchsorted(dst, mids, side="right") - 1, 0, grid.n_cells - 1)
    n_out = grid.n_cells
    d_acc = np.zeros((n_out, s.n_sigma))
    u_acc = np.zeros((n_out, s.n_u))
    w_acc = np.zeros(n_out)
    np.add.at(d_acc, dst_idx, lengths[:, None] * s.d[src_idx])
    if s.n_u:
        np.add.at(u_acc, dst_idx, lengths[:, None] * s.u[src_idx])
    np.add.at(w_acc, dst_idx, lengths)
    d_out = d_acc / w_acc[:, None]
    u_out = u_acc / w_acc[:, None] if s.n_u else np.zeros((n_out, 0))
    # renormalize only rows whose sums drifted beyond tolerance, so exact
    # refinements stay bitwise exact
    sums = d_out.sum(axis=1)
    drifted = np.abs(sums - 1.0) > SIMPLEX_TOL
    if np.any(drifted):
        d_out[drifted] = d_out[drifted] / sums[drifted, None]
    return RelaxedSignal(grid, d_out, u_out)


# ---------------------------------------------------------------------------
# CSV serialization: one row per cell, columns t_start, t_end, d_*, u_*
# ---------------------------------------------------------------------------

def signal_to_csv(s, path_or_file) -> None:
    close = False
    if isinstance(path_or_file, (str,)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "w", newline="")
        close = True
    else:
        f = path_or_file
    try:
        w = csv.writer(f)
        header = ["t_start", "t_end"]
        header += [f"d_{i + 1}" for i in range(s.n_sigma)]
        header += [f"u_{i + 1}" for i in range(s.n_u)]
        w.writerow(header)
        b = s.grid.boundaries
        for c in range(s.grid.n_cells):
            row = [repr(float(b[c])), repr(float(b[c + 1]))]
            row += [repr(float(v)) for v in s.d[c]]
            row += [repr(float(v)) for v in s.u[c]]
            w.writerow(row)
    finally:
        if close:
            f.close()


def signal_from_csv(path_or_file, pure=False):
    """Read a signal CSV; returns PureSignal when ``pure`` is set."""
    close = False
    if isinstance(path_or_file, (str,)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "r", newline="")
        close = True
    else:
        f = path_or_file
    try:
        r = csv.reader(f)
        header = next(r)
        n_sigma = sum(1 for h in header if h.startswith("d_"))
        n_u = sum(1 for h in header if h.startswith("u_"))
        if header[:2] != ["t_start", "t_end"] or n_sigma == 0:
            raise ValueError("signal CSV must start with t_start, t_end, d_1, ...")
        starts, ends, drows, urows = [], [], [], []
        for row in r:
            if not row:
                continue
            starts.append(float(row[0]))
            ends.append(float(row[1]))
            drows.append([float(v) for v in row[2 : 2 + n_sigma]])
            urows.append([float(v) for v in row[2 + n_sigma : 2 + n_sigma + n_u]])
        if not starts:
            raise ValueError("signal CSV has no cells")
        for i in range(1, len(starts)):
            if starts[i] != ends[i - 1]:
                raise ValueError(f"cells are not contiguous at row {i + 1}")
        boundaries = np.array(starts + [ends[-1]])
        grid = Grid(boundaries)
        d = np.array(drows)
        u = np.array(urows) if n_u else None
        cls = PureSignal if pure else RelaxedSignal
        return cls(grid, d, u)
    finally:
        if close:
            f.close()


def signal_to_csv_string(s) -> str:
    buf = io.StringIO()
    signal_to_csv(s, buf)
    return buf.getvalue()
