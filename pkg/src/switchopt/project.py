"""Frequency-modulation projection from relaxed to pure signals.

The operator partitions the horizon into 2^k uniform cells and emits, per
cell, mode pulses whose durations equal the relaxed duty cycles, so every
per-cell integral of the switching weights is preserved exactly.  For two
modes the mode-1 pulse is centered in the cell; for more modes consecutive
subintervals are laid out in mode order.  Output grid boundaries keep the
exact cell and pulse edges.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import AdaptKError, ProjectionResolutionError
from .sim import DEFAULT_SUBSTEPS, cost_J, simulate
from .signal import Grid, PureSignal, RelaxedSignal, merge_boundaries, resample
from .topology import TopologyKind, topo_distance

# Segments thinner than this are absorbed into their neighbors; the duty
# error introduced stays well under the 1e-12 preservation tolerance.
_SNAP_WIDTH = 1e-13

_MAX_K = 24


def _duty_integrals(s, boundaries):
    """Integrals of d (and u) over each cell of ``boundaries``."""
    src = s.grid.boundaries
    merged = np.union1d(src, boundaries)
    mids = 0.5 * (merged[:-1] + merged[1:])
    lengths = np.diff(merged)
    src_idx = np.clip(
        np.searchsorted(src, mids, side="right") - 1, 0, s.grid.n_cells - 1
    )
    dst_idx = np.clip(
        np.searchsorted(boundaries, mids, side="right") - 1, 0, boundaries.size - 2
    )
    n_out = boundaries.size - 1
    d_int = np.zeros((n_out, s.n_sigma))
    np.add.at(d_int, dst_idx, lengths[:, None] * s.d[src_idx])
    u_avg = np.zeros((n_out, s.n_u))
    if s.n_u:
        np.add.at(u_avg, dst_idx, lengths[:, None] * s.u[src_idx])
        u_avg /= np.diff(boundaries)[:, None]
    return d_int, u_avg


def project_Rk(s, k) -> PureSignal:
    """Project a relaxed signal to a pure one at pulse frequency 2^k.

    Partitions [0, t_f] into 2^k uniform cells; within each cell the
    mode-1 pulse (T1, T2) is centered for two-mode problems, with
    T1 = cell start + half the mode-2 duty and T2 = T1 + the mode-1 duty.
    Cells and pulse edges become boundaries of the output grid.
    """
    k = int(k)
    if k < 1:
        raise ValueError(f"pulse frequency exponent k must be >= 1, got {k}")
    if k > _MAX_K:
        raise ProjectionResolutionError(
            f"k={k} produces {2 ** k} cells; use a coarser k (<= {_MAX_K})"
        )
    t_f = s.grid.t_f
    n_cells = 2 ** k
    delta = t_f / n_cells
    if delta < 1e-12:
        raise ProjectionResolutionError(
            f"cell width {delta:.3e} at k={k} is below 1e-12; use a coarser k"
        )
    proj_b = np.linspace(0.0, t_f, n_cells + 1)
    duty, u_avg = _duty_integrals(s, proj_b)

    boundaries = [0.0]
    modes = []
    u_rows = []
    for c in range(n_cells):
        a = proj_b[c]
        b = proj_b[c + 1]
        if s.n_sigma == 2:
            pulse = duty[c, 0]
            gap_half = 0.5 * duty[c, 1]
            if pulse < _SNAP_WIDTH:
                segs = [(b, 1)]
            elif gap_half < _SNAP_WIDTH:
                segs = [(b, 0)]
            else:
                t1 = a + gap_half
                t2 = t1 + pulse
                segs = [(t1, 1), (t2, 0), (b, 1)]
        else:
            edge = a
            widths = duty[c]
            kept = [i for i in range(s.n_sigma) if widths[i] >= _SNAP_WIDTH]
            if not kept:
                kept = [int(np.argmax(widths))]
            segs = []
            for pos, i in enumerate(kept):
                edge = b if pos == len(kept) - 1 else edge + widths[i]
                segs.append((edge, i))
        for end, mode in segs:
            boundaries.append(end)
            modes.append(mode)
            u_rows.append(u_avg[c])

    boundaries = np.asarray(boundaries)
    widths = np.diff(boundaries)
    thin = (widths > 0.0) & (widths < 0.5 * _SNAP_WIDTH)
    if np.any(thin):
        raise ProjectionResolutionError(
            f"projection produced a segment of width {widths[thin].min():.3e}; "
            "use a coarser k"
        )
    grid = Grid(boundaries)
    d = np.zeros((grid.n_cells, s.n_sigma))
    d[np.arange(grid.n_cells), np.asarray(modes, dtype=int)] = 1.0
    u = np.asarray(u_rows) if s.n_u else None
    return PureSignal(grid, d, u)


def projection_error(problem, s, k, kind, x0, substeps=DEFAULT_SUBSTEPS) -> float:
    """Image-space distance between a signal and its projection.

    Both signals are re-sampled onto the union of their grids and simulated
    with identical layouts, so the distance is well defined under either
    topology.
    """
    projected = project_Rk(s, k)
    union = Grid(merge_boundaries(s.grid.boundaries, projected.grid.boundaries))
    a = resample(s, union)
    b = resample(projected, union)
    traj_a = simulate(problem, a, x0, substeps)
    traj_b = simulate(problem, b, x0, substeps)
    return topo_distance(kind, traj_a, traj_b)


class AdaptKResult(NamedTuple):
    k: int
    q_value: float


def adapt_k(problem, s, theta_p, cfg, x0, gamma_out=None) -> AdaptKResult:
    """Smallest frequency exponent meeting the projection-quality bound.

    Scans k in [k0, k_max] for the first k with
    Q(s, k) <= (omega - 1) * gamma * theta_p.  The inner descent is
    computed once and shared across the scan.  Raises AdaptKError carrying
    the best (k, Q) found (and all scanned values) when no k qualifies.
    """
    if not theta_p < 0.0:
        raise ValueError(f"adapt_k requires theta_p < 0, got {theta_p}")
    from .solver import Q_function, gamma_r

    if gamma_out is None:
        gamma_out = gamma_r(problem, s, cfg, x0)
    bound = (cfg.omega - 1.0) * cfg.gamma * theta_p
    best_k = None
    best_q = np.inf
    q_values = {}
    for k in range(cfg.k0, cfg.k_max + 1):
        q = Q_function(problem, s, k, cfg, x0, gamma_out=gamma_out)
        q_values[k] = q
        if q <= bound:
            return AdaptKResult(k, q)
        if q < best_q:
            best_k, best_q = k, q
    err = AdaptKError(
        f"no k in [{cfg.k0}, {cfg.k_max}] meets Q <= {bound:.3e}; "
        f"best was Q={best_q:.3e} at k={best_k}",
        best_k=best_k,
        best_q=best_q,
    )
    err.q_values = q_values
    raise err
