"""Compiled kernels. Signatures mirror ``_numpy_kernels`` exactly."""

import math

import numpy as np
from numba import njit

from ._grid import build_grid, cell_coords


@njit(cache=True)
def _dist2(xs, i, ys, j, period):
    s = 0.0
    for a in range(xs.shape[1]):
        d = xs[i, a] - ys[j, a]
        p = period[a]
        if p > 0.0:
            d = d - p * math.floor(d / p + 0.5)
        s += d * d
    return s


@njit(cache=True)
def _cells_in_box(center, span, ncell, stride, period, buf):
    """Write linear indices of cells within ``span`` of ``center`` into buf."""
    dim = center.shape[0]
    lo = np.empty(dim, dtype=np.int64)
    cnt = np.empty(dim, dtype=np.int64)
    wrap = np.zeros(dim, dtype=np.bool_)
    total = 1
    for a in range(dim):
        s = span[a]
        if period[a] > 0.0:
            if 2 * s + 1 >= ncell[a]:
                lo[a] = 0
                cnt[a] = ncell[a]
            else:
                lo[a] = center[a] - s
                cnt[a] = 2 * s + 1
                wrap[a] = True
        else:
            l = max(0, center[a] - s)
            h = min(ncell[a] - 1, center[a] + s)
            lo[a] = l
            cnt[a] = h - l + 1
        total *= cnt[a]
    if total > buf.shape[0]:
        buf = np.empty(total, dtype=np.int64)
    odo = np.zeros(dim, dtype=np.int64)
    for k in range(total):
        lin = 0
        for a in range(dim):
            c = lo[a] + odo[a]
            if wrap[a]:
                c = c % ncell[a]
            lin += c * stride[a]
        buf[k] = lin
        a = dim - 1
        while a >= 0:
            odo[a] += 1
            if odo[a] < cnt[a]:
                break
            odo[a] = 0
            a -= 1
    return buf, total


@njit(cache=True)
def _greedy(coords, period, r2, order, cells, ncell, stride, cell_start, members):
    n = coords.shape[0]
    dim = coords.shape[1]
    blocked = np.zeros(n, dtype=np.bool_)
    out = np.empty(n, dtype=np.int64)
    k = 0
    span = np.ones(dim, dtype=np.int64)
    buf = np.empty(3 ** dim, dtype=np.int64)
    for t in range(order.shape[0]):
        i = order[t]
        if blocked[i]:
            continue
        out[k] = i
        k += 1
        buf, m = _cells_in_box(cells[i], span, ncell, stride, period, buf)
        for c in range(m):
            cell = buf[c]
            for p in range(cell_start[cell], cell_start[cell + 1]):
                j = members[p]
                if not blocked[j] and _dist2(coords, i, coords, j, period) <= r2:
                    blocked[j] = True
    return out[:k].copy()


@njit(cache=True)
def _better(mind, rank, i, j):
    # farther first; exact ties go to the smaller original point index
    if j < 0:
        return i >= 0
    if i < 0:
        return False
    if mind[i] != mind[j]:
        return mind[i] > mind[j]
    return rank[i] < rank[j]


@njit(cache=True)
def _cell_best(mind, rank, taken, cell_start, c):
    best = -1
    for p in range(cell_start[c], cell_start[c + 1]):
        if not taken[p] and _better(mind, rank, p, best):
            best = p
    return best


@njit(cache=True)
def _block_best(mind, rank, cellbest, b, bsize, ncells):
    best = -1
    for c in range(b * bsize, min((b + 1) * bsize, ncells)):
        q = cellbest[c]
        if q >= 0 and _better(mind, rank, q, best):
            best = q
    return best


@njit(cache=True)
def _fps(coords, period, r2, start, rank, cells, width, ncell, stride, cell_start):
    """Farthest-point packing on cell-sorted points.

    The running maximum of the nearest-accepted distance is tracked with a
    two-level (cell, block-of-cells) tournament so each step only rescans
    cells touched by the newly accepted point.
    """
    n = coords.shape[0]
    dim = coords.shape[1]
    ncells = cell_start.shape[0] - 1
    bsize = max(1, int(math.sqrt(ncells)))
    nblocks = (ncells + bsize - 1) // bsize
    taken = np.zeros(n, dtype=np.bool_)
    mind = np.empty(n)
    for j in range(n):
        mind[j] = _dist2(coords, start, coords, j, period)
    taken[start] = True
    cellbest = np.empty(ncells, dtype=np.int64)
    for c in range(ncells):
        cellbest[c] = _cell_best(mind, rank, taken, cell_start, c)
    blockbest = np.empty(nblocks, dtype=np.int64)
    for b in range(nblocks):
        blockbest[b] = _block_best(mind, rank, cellbest, b, bsize, ncells)
    dirty_block = np.zeros(nblocks, dtype=np.bool_)
    out = np.empty(n, dtype=np.int64)
    out[0] = start
    k = 1
    span = np.empty(dim, dtype=np.int64)
    buf = np.empty(3 ** dim, dtype=np.int64)
    while True:
        i = -1
        for b in range(nblocks):
            if _better(mind, rank, blockbest[b], i):
                i = blockbest[b]
        if i < 0 or mind[i] <= r2:
            break
        key = mind[i]
        taken[i] = True
        out[k] = i
        k += 1
        rad = math.sqrt(key)
        for a in range(dim):
            span[a] = int(math.ceil(rad / width[a]))
        buf, m = _cells_in_box(cells[i], span, ncell, stride, period, buf)
        for t in range(m):
            c = buf[t]
            changed = False
            for j in range(cell_start[c], cell_start[c + 1]):
                if taken[j]:
                    continue
                d = _dist2(coords, i, coords, j, period)
                if d < mind[j]:
                    mind[j] = d
                    changed = True
            if changed:
                cellbest[c] = _cell_best(mind, rank, taken, cell_start, c)
                dirty_block[c // bsize] = True
        ci = 0
        for a in range(dim):
            ci += cells[i, a] * stride[a]
        cellbest[ci] = _cell_best(mind, rank, taken, cell_start, ci)
        dirty_block[ci // bsize] = True
        for t in range(m):
            b = buf[t] // bsize
            if dirty_block[b]:
                blockbest[b] = _block_best(mind, rank, cellbest, b, bsize, ncells)
                dirty_block[b] = False
        b = ci // bsize
        if dirty_block[b]:
            blockbest[b] = _block_best(mind, rank, cellbest, b, bsize, ncells)
            dirty_block[b] = False
    return out[:k].copy()


@njit(cache=True)
def _nearest_count(test, test_cells, lattice, period, r2, width, ncell, stride,
                   cell_start, members):
    nt = test.shape[0]
    dim = test.shape[1]
    nearest = np.empty(nt)
    count = np.zeros(nt, dtype=np.int64)
    span = np.ones(dim, dtype=np.int64)
    buf = np.empty(3 ** dim, dtype=np.int64)
    wmin = width.min()
    w2 = wmin * wmin
    for t in range(nt):
        best = np.inf
        buf, m = _cells_in_box(test_cells[t], span, ncell, stride, period, buf)
        for c in range(m):
            cell = buf[c]
            for p in range(cell_start[cell], cell_start[cell + 1]):
                d = _dist2(test, t, lattice, members[p], period)
                if d < best:
                    best = d
                if d <= r2:
                    count[t] += 1
        if best > w2:
            for j in range(lattice.shape[0]):
                d = _dist2(test, t, lattice, j, period)
                if d < best:
                    best = d
        nearest[t] = math.sqrt(best)
    return nearest, count


@njit(cache=True)
def _min_sep2(pts, period):
    best = np.inf
    n = pts.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            d = _dist2(pts, i, pts, j, period)
            if d < best:
                best = d
    return best


@njit(cache=True)
def _grid_min_sep2(pts, cells, period, width, ncell, stride, cell_start, members):
    dim = pts.shape[1]
    span = np.ones(dim, dtype=np.int64)
    buf = np.empty(3 ** dim, dtype=np.int64)
    best = np.inf
    for i in range(pts.shape[0]):
        buf, m = _cells_in_box(cells[i], span, ncell, stride, period, buf)
        for c in range(m):
            cell = buf[c]
            for p in range(cell_start[cell], cell_start[cell + 1]):
                j = members[p]
                if j != i:
                    d = _dist2(pts, i, pts, j, period)
                    if d < best:
                        best = d
    return best


@njit(cache=True)
def _sph_harm(z, phi, lmax):
    n = z.shape[0]
    nb = (lmax + 1) * (lmax + 1)
    out = np.empty((n, nb))
    inv4pi = 1.0 / (4.0 * math.pi)
    sq2 = math.sqrt(2.0)
    for t in range(n):
        x = z[t]
        s = math.sqrt(max(0.0, 1.0 - x * x))
        pmm = math.sqrt(inv4pi)
        for m in range(lmax + 1):
            if m > 0:
                pmm = pmm * math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s
            cm = math.cos(m * phi[t])
            sm = math.sin(m * phi[t])
            p2 = 0.0
            p1 = pmm
            for l in range(m, lmax + 1):
                if l == m:
                    p = pmm
                elif l == m + 1:
                    p = math.sqrt(2.0 * m + 3.0) * x * pmm
                else:
                    a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                    b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                    p = a * (x * p1 - b * p2)
                if l > m:
                    p2 = p1
                    p1 = p
                base = l * l + l
                if m == 0:
                    out[t, base] = p
                else:
                    out[t, base + m] = sq2 * p * cm
                    out[t, base - m] = sq2 * p * sm
    return out


def _sorted(coords, period, radius):
    """Reorder points by grid cell so neighbour scans touch contiguous memory."""
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    grid = build_grid(coords, period, radius)
    perm = grid.members
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    coords_s = np.ascontiguousarray(coords[perm])
    ident = np.arange(perm.size, dtype=np.int64)
    return coords_s, cell_coords(coords_s, grid), grid, ident, perm, inv


def greedy_pack(coords, period, r_block, order):
    period = np.asarray(period, dtype=np.float64)
    cs, cells, grid, ident, perm, inv = _sorted(coords, period, r_block)
    order = inv[np.asarray(order, dtype=np.int64)]
    out = _greedy(cs, period, r_block * r_block, order, cells, grid.ncell, grid.stride,
                  grid.cell_start, ident)
    return perm[out]


def fps_pack(coords, period, r_block, start):
    period = np.asarray(period, dtype=np.float64)
    cs, cells, grid, ident, perm, inv = _sorted(coords, period, r_block)
    out = _fps(cs, period, r_block * r_block, int(inv[int(start)]), perm, cells, grid.width,
               grid.ncell, grid.stride, grid.cell_start)
    return perm[out]


def nearest_and_count(test, lattice, period, r_count):
    period = np.asarray(period, dtype=np.float64)
    ls, _, grid, ident, _, _ = _sorted(lattice, period, r_count)
    test = np.ascontiguousarray(test, dtype=np.float64)
    tcells = cell_coords(test, grid)
    visit = np.argsort(tcells @ grid.stride, kind="stable")
    tnear, tcount = _nearest_count(np.ascontiguousarray(test[visit]), tcells[visit], ls, period,
                                   r_count * r_count, grid.width, grid.ncell, grid.stride,
                                   grid.cell_start, ident)
    nearest = np.empty_like(tnear)
    count = np.empty_like(tcount)
    nearest[visit] = tnear
    count[visit] = tcount
    return nearest, count


def min_separation(points, period, radius_hint=None):
    pts = np.ascontiguousarray(points, dtype=np.float64)
    period = np.asarray(period, dtype=np.float64)
    if pts.shape[0] < 2:
        return math.inf
    if radius_hint is not None and radius_hint > 0:
        grid = build_grid(pts, period, radius_hint)
        best = _grid_min_sep2(pts, cell_coords(pts, grid), period, grid.width, grid.ncell,
                              grid.stride, grid.cell_start, grid.members)
        if best <= grid.width.min() ** 2:
            return math.sqrt(best)
    return math.sqrt(_min_sep2(pts, period))


def real_sph_harm(z, phi, lmax):
    return _sph_harm(np.ascontiguousarray(z, dtype=np.float64),
                     np.ascontiguousarray(phi, dtype=np.float64), int(lmax))
