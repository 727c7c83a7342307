"""Uniform cell grid over embedded point clouds (optionally periodic per axis).

Cells are at least ``radius`` wide on every axis, so every pair of points at
Euclidean (minimum-image) distance <= radius sits in adjacent cells.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CellGrid:
    origin: np.ndarray      # (D,)
    width: np.ndarray       # (D,) cell width per axis
    ncell: np.ndarray       # (D,) int64
    stride: np.ndarray      # (D,) int64
    period: np.ndarray      # (D,) 0.0 for non-periodic axes
    cell_start: np.ndarray  # (ncells + 1,) CSR offsets into ``members``
    members: np.ndarray     # point indices sorted by cell


def _axis_layout(lo, hi, period, radius, max_per_axis):
    if period > 0.0:
        n = int(min(np.floor(period / radius), max_per_axis)) if radius > 0 else max_per_axis
        if n < 3:
            n = 1
        return 0.0, period / n, n
    extent = hi - lo
    if extent <= 0.0 or radius <= 0.0:
        return lo, max(extent, radius, 1.0), 1
    n = int(max(1, min(np.floor(extent / radius), max_per_axis)))
    return lo, extent / n, n


def cell_coords(points, grid):
    """Integer cell coordinates of ``points`` (clamped into the grid)."""
    pts = np.asarray(points, dtype=np.float64)
    out = np.empty(pts.shape, dtype=np.int64)
    for a in range(pts.shape[1]):
        x = pts[:, a] - grid.origin[a]
        if grid.period[a] > 0.0:
            x = np.mod(x, grid.period[a])
        c = np.floor(x / grid.width[a]).astype(np.int64)
        out[:, a] = np.clip(c, 0, grid.ncell[a] - 1)
    return out


def build_grid(points, period, radius, max_cells=None):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n, dim = pts.shape
    period = np.asarray(period, dtype=np.float64)
    if max_cells is None:
        max_cells = 4 * n + 64
    lo = pts.min(axis=0) if n else np.zeros(dim)
    hi = pts.max(axis=0) if n else np.zeros(dim)
    cap = max(1, int(np.floor(max_cells ** (1.0 / dim))))
    origin = np.empty(dim)
    width = np.empty(dim)
    ncell = np.empty(dim, dtype=np.int64)
    for a in range(dim):
        origin[a], width[a], ncell[a] = _axis_layout(lo[a], hi[a], period[a], radius, cap)
    stride = np.ones(dim, dtype=np.int64)
    for a in range(dim - 2, -1, -1):
        stride[a] = stride[a + 1] * ncell[a + 1]
    total = int(np.prod(ncell))
    grid = CellGrid(origin, width, ncell, stride, period,
                    np.zeros(total + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    lin = cell_coords(pts, grid) @ stride if n else np.zeros(0, dtype=np.int64)
    members = np.argsort(lin, kind="stable").astype(np.int64)
    counts = np.bincount(lin, minlength=total)
    cell_start = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(counts, out=cell_start[1:])
    return CellGrid(origin, width, ncell, stride, period, cell_start, members)
