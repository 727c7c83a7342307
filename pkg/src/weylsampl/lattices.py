"""Metric rho-lattices by greedy maximal packing.

A lattice here follows the normative contract: points pairwise at least rho
apart (so the balls B(x_j, rho/2) are disjoint) and, by maximality, the balls
B(x_j, rho) cover every candidate point. The covering-lemma variant with
rho/4-disjoint and rho/2-covering balls is the same construction run at
rho/2.
"""

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import dijkstra

from . import accel
from .errors import InvalidInputError
from .manifolds import Mesh, candidate_pool, rng_from_seed

PACK_RTOL = 1e-9
MIN_POOL = 10_000
POOL_PER_CELL = 50


@dataclass(frozen=True)
class LatticeDiagnostics:
    packing_ok: bool
    min_separation: float
    covering_radius: float
    multiplicity: int
    candidate_count: int
    seed: int
    order: str = "random"


@dataclass(frozen=True, eq=False)
class Lattice:
    manifold: object
    rho: float
    points: np.ndarray
    diagnostics: LatticeDiagnostics

    def __len__(self):
        return len(self.points)

    @property
    def cardinality(self):
        return len(self.points)

    def to_dict(self):
        pts = self.points
        return {
            "rho": float(self.rho),
            "points": pts.tolist(),
            "diagnostics": {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                            for k, v in asdict(self.diagnostics).items()},
            "seed": int(self.diagnostics.seed),
        }


class Extremes(NamedTuple):
    min_card: int
    max_card: int
    trials: int
    cards: tuple


def pack_tolerance(m):
    """Slack used when verifying pairwise separation."""
    if isinstance(m, Mesh):
        return float(m.edge_lengths.max())
    return PACK_RTOL * m.diameter


def default_pool_size(m, rho):
    if isinstance(m, Mesh):
        return m.n_vertices
    return int(max(MIN_POOL, math.ceil(POOL_PER_CELL * (m.diameter / rho) ** m.dimension)))


def _mesh_greedy(m, rho, pool, order_idx):
    in_pool = np.zeros(m.n_vertices, dtype=bool)
    in_pool[pool] = True
    blocked = ~in_pool
    out = []
    for i in order_idx:
        v = pool[i]
        if blocked[v]:
            continue
        out.append(v)
        d = dijkstra(m.graph, indices=v, limit=rho)
        blocked |= d < rho
    return np.asarray(out, dtype=np.int64)


def _mesh_fps(m, rho, pool, start):
    in_pool = np.zeros(m.n_vertices, dtype=bool)
    in_pool[pool] = True
    mind = dijkstra(m.graph, indices=pool[start])
    out = [int(pool[start])]
    while True:
        masked = np.where(in_pool, mind, -np.inf)
        masked[out] = -np.inf
        v = int(np.argmax(masked))
        if masked[v] < rho:
            break
        out.append(v)
        np.minimum(mind, dijkstra(m.graph, indices=v, limit=masked[v]), out=mind)
    return np.asarray(out, dtype=np.int64)


def build_lattice(m, rho, pool=None, seed=0, order="random"):
    """Greedy maximal rho-packing over a candidate pool.

    ``order="random"`` sweeps the pool in a seed-shuffled order; ``"fps"``
    uses farthest-point ordering from a seed-chosen start. A candidate is
    accepted when it is at least rho (up to the packing tolerance) from
    every accepted point, so no pool point can be added afterwards.
    Diagnostics are computed with the pool as the test set.
    """
    if not rho > 0:
        raise InvalidInputError("rho must be positive")
    if order not in ("random", "fps"):
        raise InvalidInputError(f"unknown order {order!r}")
    if pool is None:
        pool = candidate_pool(m, default_pool_size(m, rho), seed)
    pool = m.as_points(pool)
    if len(pool) == 0:
        raise InvalidInputError("candidate pool is empty")
    rng = rng_from_seed(seed)
    tol = pack_tolerance(m)
    if isinstance(m, Mesh):
        if order == "fps":
            idx = _mesh_fps(m, rho, pool, int(rng.integers(len(pool))))
        else:
            idx = _mesh_greedy(m, rho, pool, rng.permutation(len(pool)))
        points = idx
    else:
        coords = m.embed(pool)
        if rho - tol > m.diameter:
            perm = rng.permutation(len(pool))
            sel = perm[:1] if order == "random" else np.array([int(rng.integers(len(pool)))])
        else:
            r_block = m.chord(rho - tol)
            if order == "fps":
                sel = accel.fps_pack(coords, m.period, r_block, int(rng.integers(len(pool))))
            else:
                sel = accel.greedy_pack(coords, m.period, r_block, rng.permutation(len(pool)))
        points = pool[sel]
        if points.shape[1] == 1:
            points = points[:, 0]
    lat = Lattice(m, float(rho), points, None)
    diag = lattice_diagnostics(lat, pool, seed=seed, order=order)
    object.__setattr__(lat, "diagnostics", diag)
    return lat


def lattice_from_points(m, rho, points, test_points=None, seed=0):
    """Wrap user-supplied points as a lattice, diagnosed against ``test_points``
    (default: a fresh candidate pool)."""
    if not rho > 0:
        raise InvalidInputError("rho must be positive")
    pts = m.as_points(points)
    if len(pts) == 0:
        raise InvalidInputError("lattice needs at least one point")
    if pts.ndim == 2 and pts.shape[1] == 1:
        pts = pts[:, 0]
    if test_points is None:
        test_points = candidate_pool(m, default_pool_size(m, rho), seed)
    lat = Lattice(m, float(rho), pts, None)
    object.__setattr__(lat, "diagnostics",
                       lattice_diagnostics(lat, test_points, seed=seed, order="given"))
    return lat


def _mesh_diagnostics(lat, test):
    m = lat.manifold
    rho = lat.rho
    pts = np.asarray(lat.points, dtype=np.int64)
    nearest = dijkstra(m.graph, indices=pts, min_only=True)[test]
    count = np.zeros(m.n_vertices, dtype=np.int64)
    min_sep = math.inf
    for k, v in enumerate(pts):
        d = dijkstra(m.graph, indices=v, limit=2 * rho)
        count += d <= rho
        others = np.delete(d[pts], k)
        if others.size:
            min_sep = min(min_sep, float(others.min()))
    return min_sep, float(nearest.max()), int(count[test].max())


def lattice_diagnostics(lat, test_points, seed=None, order=None):
    """Packing, covering radius and cover multiplicity against test points.

    ``multiplicity`` is the largest number of closed balls B(x_j, rho) that
    contain a single test point. For meshes ``min_separation`` is inf when no
    two lattice points lie within 2*rho of each other.
    """
    m = lat.manifold
    test = m.as_points(test_points)
    if len(test) == 0:
        raise InvalidInputError("test point set is empty")
    tol = pack_tolerance(m)
    if isinstance(m, Mesh):
        min_sep, cover, mult = _mesh_diagnostics(lat, test)
    else:
        tc = m.embed(test)
        lc = m.embed(lat.points)
        r_count = m.chord(lat.rho)
        nearest, count = accel.nearest_and_count(tc, lc, m.period, r_count)
        cover = float(m.from_chord(nearest.max()))
        mult = int(count.max())
        sep = accel.min_separation(lc, m.period, m.chord(lat.rho))
        min_sep = float(m.from_chord(sep)) if math.isfinite(sep) else math.inf
    old = lat.diagnostics
    return LatticeDiagnostics(
        packing_ok=bool(min_sep >= lat.rho - tol),
        min_separation=min_sep,
        covering_radius=cover,
        multiplicity=mult,
        candidate_count=len(test),
        seed=int(seed if seed is not None else (old.seed if old else 0)),
        order=order if order is not None else (old.order if old else "random"),
    )


def seeded_lattices(m, rho, trials, base_seed=0, pool_size=None):
    """Yield the ``trials`` seeded constructions used by ``lattice_extremes``.

    Seeds are ``base_seed + i``, each with its own candidate pool. When
    ``trials >= 2`` the last construction uses farthest-point ordering.
    """
    trials = int(trials)
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    n = pool_size or default_pool_size(m, rho)
    for i in range(trials):
        seed = base_seed + i
        order = "fps" if trials >= 2 and i == trials - 1 else "random"
        pool = candidate_pool(m, n, seed)
        yield build_lattice(m, rho, pool, seed, order=order)


def lattice_extremes(m, rho, trials, base_seed=0, pool_size=None):
    """Smallest and largest cardinalities over ``trials`` seeded constructions.

    See ``seeded_lattices`` for the family. These are observed extremes over
    finitely many constructions: the observed minimum is an upper bound for
    the infimum over all lattices and the observed maximum a lower bound for
    the supremum.
    """
    cards = [len(lat) for lat in seeded_lattices(m, rho, trials, base_seed, pool_size)]
    return Extremes(min(cards), max(cards), len(cards), tuple(cards))
