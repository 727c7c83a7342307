"""Reference kernels in plain numpy (brute force, no spatial index)."""

import numpy as np


def _dist2_to(coords, x, period):
    d2 = np.zeros(coords.shape[0])
    for a in range(coords.shape[1]):
        d = coords[:, a] - x[a]
        p = period[a]
        if p > 0.0:
            d = d - p * np.floor(d / p + 0.5)
        d2 += d * d
    return d2


def greedy_pack(coords, period, r_block, order):
    coords = np.asarray(coords, dtype=np.float64)
    period = np.asarray(period, dtype=np.float64)
    r2 = r_block * r_block
    blocked = np.zeros(coords.shape[0], dtype=bool)
    out = []
    for i in np.asarray(order, dtype=np.int64):
        if blocked[i]:
            continue
        out.append(i)
        blocked |= _dist2_to(coords, coords[i], period) <= r2
    return np.asarray(out, dtype=np.int64)


def fps_pack(coords, period, r_block, start):
    coords = np.asarray(coords, dtype=np.float64)
    period = np.asarray(period, dtype=np.float64)
    r2 = r_block * r_block
    mind = _dist2_to(coords, coords[start], period)
    taken = np.zeros(coords.shape[0], dtype=bool)
    taken[start] = True
    out = [int(start)]
    while True:
        masked = np.where(taken, -np.inf, mind)
        i = int(np.argmax(masked))
        if masked[i] <= r2:
            break
        taken[i] = True
        out.append(i)
        np.minimum(mind, _dist2_to(coords, coords[i], period), out=mind)
    return np.asarray(out, dtype=np.int64)


def nearest_and_count(test, lattice, period, r_count, chunk=4096):
    test = np.asarray(test, dtype=np.float64)
    lattice = np.asarray(lattice, dtype=np.float64)
    period = np.asarray(period, dtype=np.float64)
    r2 = r_count * r_count
    nearest = np.empty(test.shape[0])
    count = np.empty(test.shape[0], dtype=np.int64)
    for s in range(0, test.shape[0], chunk):
        blk = test[s:s + chunk]
        d2 = np.zeros((blk.shape[0], lattice.shape[0]))
        for a in range(test.shape[1]):
            d = blk[:, a, None] - lattice[None, :, a]
            p = period[a]
            if p > 0.0:
                d = d - p * np.floor(d / p + 0.5)
            d2 += d * d
        nearest[s:s + chunk] = np.sqrt(d2.min(axis=1))
        count[s:s + chunk] = (d2 <= r2).sum(axis=1)
    return nearest, count


def min_separation(points, period, radius_hint=None):
    pts = np.asarray(points, dtype=np.float64)
    period = np.asarray(period, dtype=np.float64)
    best = np.inf
    for i in range(pts.shape[0] - 1):
        best = min(best, _dist2_to(pts[i + 1:], pts[i], period).min())
    return float(np.sqrt(best))


def real_sph_harm(z, phi, lmax):
    z = np.asarray(z, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    out = np.empty((z.shape[0], (lmax + 1) ** 2))
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pmm = np.full(z.shape, np.sqrt(1.0 / (4.0 * np.pi)))
    for m in range(lmax + 1):
        if m > 0:
            pmm = pmm * np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * s
        cm = np.cos(m * phi)
        sm = np.sin(m * phi)
        p2 = np.zeros_like(z)
        p1 = pmm
        for l in range(m, lmax + 1):
            if l == m:
                p = pmm
            elif l == m + 1:
                p = np.sqrt(2.0 * m + 3.0) * z * pmm
            else:
                a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
                b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
                p = a * (z * p1 - b * p2)
            if l > m:
                p2 = p1
                p1 = p
            base = l * l + l
            if m == 0:
                out[:, base] = p
            else:
                out[:, base + m] = np.sqrt(2.0) * p * cm
                out[:, base - m] = np.sqrt(2.0) * p * sm
    return out
