"""Manifold models: geodesic distance, volumes, balls, quadrature, point pools.

Points are numpy arrays. Circle points are arclengths in [0, L); flat torus
points are rows of d coordinates in [0, L_i); sphere points are unit
3-vectors; mesh points are vertex indices.

Random pools use numpy's Philox generator (a 64-bit counter-based PRNG)
keyed by the integer seed, so results are reproducible across platforms.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.special import gamma as gamma_fn

from . import meshes
from .errors import InvalidInputError

SPHERE_TOL = 1e-12


def rng_from_seed(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


class QuadratureRule(NamedTuple):
    nodes: np.ndarray
    weights: np.ndarray


class BallConstants(NamedTuple):
    a1: float
    a2: float
    c: float
    n_m: float


class ManifoldModel:
    """Common interface. Subclasses are immutable after construction."""

    kind = "abstract"
    dimension = 0

    @property
    def volume(self):
        raise NotImplementedError

    @property
    def injectivity_radius(self):
        raise NotImplementedError

    @property
    def diameter(self):
        raise NotImplementedError

    @property
    def is_analytic(self):
        return True

    def as_points(self, x):
        raise NotImplementedError

    def distance(self, x, y):
        raise NotImplementedError

    def ball_volume(self, rho):
        raise NotImplementedError

    def describe(self):
        raise NotImplementedError

    # embedding used by the lattice kernels; geodesic balls are Euclidean
    # (minimum-image) balls of radius ``chord(rho)`` in these coordinates
    def embed(self, points):
        return self.as_points(points)

    @property
    def period(self):
        raise NotImplementedError

    def chord(self, rho):
        return float(rho)

    def from_chord(self, c):
        return np.asarray(c, dtype=float)


@dataclass(frozen=True, eq=False)
class Circle(ManifoldModel):
    circumference: float = 2 * math.pi
    kind = "circle"
    dimension = 1

    def __post_init__(self):
        if not self.circumference > 0:
            raise InvalidInputError("circumference must be positive")

    @property
    def volume(self):
        return float(self.circumference)

    @property
    def injectivity_radius(self):
        return self.circumference / 2

    @property
    def diameter(self):
        return self.circumference / 2

    @property
    def period(self):
        return np.array([self.circumference])

    def as_points(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x >= self.circumference):
            raise InvalidInputError(f"circle points must lie in [0, {self.circumference})")
        return x

    def distance(self, x, y):
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        d = np.mod(d, self.circumference)
        return np.minimum(d, self.circumference - d)

    def ball_volume(self, rho):
        return np.minimum(2 * np.asarray(rho, dtype=float), self.circumference)

    def describe(self):
        return {"kind": self.kind, "circumference": self.circumference}


@dataclass(frozen=True, eq=False)
class FlatTorus(ManifoldModel):
    lengths: tuple = (1.0, 1.0)
    kind = "torus"

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        if not lengths or any(not v > 0 for v in lengths):
            raise InvalidInputError("torus side lengths must be positive")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dimension(self):
        return len(self.lengths)

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def injectivity_radius(self):
        return min(self.lengths) / 2

    @property
    def diameter(self):
        return float(np.linalg.norm(np.asarray(self.lengths) / 2))

    @property
    def period(self):
        return np.asarray(self.lengths)

    def as_points(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1 and self.dimension > 1:
            x = x.reshape(1, -1) if x.size == self.dimension else x
        x = x.reshape(-1, self.dimension)
        L = np.asarray(self.lengths)
        if np.any(~np.isfinite(x)) or np.any(x < 0) or np.any(x >= L):
            raise InvalidInputError("torus coordinates must lie in [0, L_i)")
        return x

    def distance(self, x, y):
        L = np.asarray(self.lengths)
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        d = np.mod(d, L)
        d = np.minimum(d, L - d)
        return np.sqrt(np.sum(d * d, axis=-1))

    def ball_volume(self, rho):
        rho = np.asarray(rho, dtype=float)
        d = self.dimension
        unit = math.pi ** (d / 2) / gamma_fn(d / 2 + 1)
        if d == 1:
            return np.minimum(2 * rho, self.lengths[0])
        full = rho >= self.diameter
        if np.any(~full & (rho >= self.injectivity_radius)):
            raise InvalidInputError("flat-torus ball volume is closed-form only below min(L)/2")
        return np.where(full, self.volume, unit * rho ** d)

    def describe(self):
        return {"kind": self.kind, "lengths": list(self.lengths)}


@dataclass(frozen=True, eq=False)
class Sphere2(ManifoldModel):
    kind = "sphere"
    dimension = 2
    radius = 1.0

    @property
    def volume(self):
        return 4 * math.pi

    @property
    def injectivity_radius(self):
        return math.pi

    @property
    def diameter(self):
        return math.pi

    @property
    def period(self):
        return np.zeros(3)

    def as_points(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        norms = np.linalg.norm(x, axis=1)
        if np.any(np.abs(norms - 1.0) > SPHERE_TOL * 1e3):
            raise InvalidInputError("sphere points must be unit 3-vectors")
        return x / norms[:, None]

    def distance(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # atan2 form stays accurate for nearly equal and nearly antipodal pairs
        cross = np.linalg.norm(np.cross(x, y), axis=-1)
        dot = np.sum(x * y, axis=-1)
        return np.arctan2(cross, dot)

    def ball_volume(self, rho):
        rho = np.minimum(np.asarray(rho, dtype=float), math.pi)
        return 2 * math.pi * (1 - np.cos(rho))

    def chord(self, rho):
        return 2 * math.sin(min(float(rho), math.pi) / 2)

    def from_chord(self, c):
        return 2 * np.arcsin(np.minimum(np.asarray(c, dtype=float) / 2, 1.0))

    def describe(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class Mesh(ManifoldModel):
    """Triangle mesh with graph (Dijkstra) geodesics and lumped vertex masses.

    ``period`` (per coordinate, 0 for none) turns on minimum-image edge
    vectors so flat tori can be meshed without an embedding.
    """

    vertices: np.ndarray
    faces: np.ndarray
    period: np.ndarray = None
    injectivity_override: float = None
    name: str = "mesh"
    kind = "mesh"
    dimension = 2

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        f = np.ascontiguousarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or f.ndim != 2 or f.shape[1] != 3:
            raise InvalidInputError("mesh needs (n, 3) vertices and (m, 3) faces")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidInputError("face references a missing vertex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if self.period is not None:
            object.__setattr__(self, "period", np.asarray(self.period, dtype=float))
        area = meshes.triangle_areas(v, f, self.period)
        scale = max(np.median(area), np.finfo(float).tiny)
        if np.any(area <= 1e-12 * scale):
            raise InvalidInputError("mesh has degenerate (zero-area) triangles")
        ncomp, _ = connected_components(self.graph, directed=False)
        if ncomp != 1:
            raise InvalidInputError(f"mesh is not edge-connected ({ncomp} components)")

    @classmethod
    def from_off(cls, path, **kwargs):
        v, f = meshes.read_off(path)
        return cls(v, f, **kwargs)

    @property
    def is_analytic(self):
        return False

    @cached_property
    def _graph_and_lengths(self):
        return meshes.edge_graph(self.vertices, self.faces, self.period)

    @property
    def graph(self):
        return self._graph_and_lengths[0]

    @property
    def edge_lengths(self):
        return self._graph_and_lengths[1]

    @cached_property
    def mass(self):
        return meshes.lumped_mass(self.vertices, self.faces, self.period)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def volume(self):
        return float(self.mass.sum())

    @cached_property
    def diameter(self):
        # repeated double sweep; a lower bound that is tight on typical meshes
        src, best = 0, 0.0
        for _ in range(4):
            d = dijkstra(self.graph, indices=src)
            far = int(np.argmax(d))
            if d[far] <= best:
                break
            best, src = float(d[far]), far
        return best

    @property
    def injectivity_radius(self):
        r = self.diameter / 4
        if self.injectivity_override is not None:
            r = min(r, float(self.injectivity_override))
        return r

    def as_points(self, x):
        x = np.asarray(x)
        if x.dtype.kind not in "iu":
            if np.any(x != np.round(x)):
                raise InvalidInputError("mesh points are integer vertex indices")
            x = x.astype(np.int64)
        x = x.reshape(-1).astype(np.int64)
        if np.any(x < 0) or np.any(x >= self.n_vertices):
            raise InvalidInputError("vertex index out of range")
        return x

    def distances_from(self, sources, limit=np.inf):
        """Dijkstra distances, shape (len(sources), n_vertices)."""
        src = self.as_points(sources)
        return np.atleast_2d(dijkstra(self.graph, indices=src, limit=limit))

    def distance(self, x, y):
        xs = self.as_points(x)
        ys = self.as_points(y)
        if len(xs) == 1 or len(ys) == 1:
            if len(xs) == 1:
                out = self.distances_from(xs)[0][ys]
            else:
                out = self.distances_from(ys)[0][xs]
        else:
            if len(xs) != len(ys):
                raise InvalidInputError("point arrays must have equal length")
            uniq, inv = np.unique(xs, return_inverse=True)
            table = self.distances_from(uniq)
            out = table[inv, ys]
        return out if out.size > 1 else float(out[0])

    def ball_volume_at(self, center, rho):
        d = self.distances_from([center], limit=float(rho))[0]
        return float(self.mass[d <= rho].sum())

    def ball_volume(self, rho):
        raise InvalidInputError("mesh ball volumes depend on the center; use ball_volume(m, x, rho)")

    def describe(self):
        return {"kind": self.kind, "name": self.name, "n_vertices": self.n_vertices,
                "n_faces": int(len(self.faces))}


def make_manifold(kind, **params):
    """Factory used by the CLI: ``circle``, ``torus``, ``sphere`` or ``mesh``."""
    kind = kind.lower()
    if kind == "circle":
        return Circle(float(params.get("circumference", 2 * math.pi)))
    if kind == "torus":
        return FlatTorus(tuple(params.get("lengths", (1.0, 1.0))))
    if kind == "sphere":
        return Sphere2()
    if kind == "mesh":
        if "path" in params and params["path"]:
            return Mesh.from_off(params["path"], injectivity_override=params.get("injectivity"),
                                 name=str(params["path"]))
        if "icosphere" in params:
            v, f = meshes.icosphere(int(params["icosphere"]))
            return Mesh(v, f, injectivity_override=params.get("injectivity"),
                        name=f"icosphere-{params['icosphere']}")
        if "torus_grid" in params:
            v, f, per = meshes.torus_grid(int(params["torus_grid"]), float(params.get("length", 1.0)))
            return Mesh(v, f, period=per, injectivity_override=params.get("injectivity"),
                        name=f"torus-grid-{params['torus_grid']}")
        raise InvalidInputError("mesh manifold needs a path, icosphere level or torus_grid size")
    raise InvalidInputError(f"unknown manifold kind {kind!r}")


def geodesic_distance(m, x, y):
    """Geodesic distance between points (broadcasts over leading axes)."""
    if isinstance(m, Mesh):
        return m.distance(x, y)
    xs = m.as_points(x)
    ys = m.as_points(y)
    if isinstance(m, Circle):
        out = m.distance(xs[:, 0], ys[:, 0])
    else:
        out = m.distance(xs, ys)
    return float(out[0]) if out.size == 1 else out


def ball_volume(m, x, rho):
    """Riemannian volume of the closed geodesic ball B(x, rho)."""
    if np.any(np.asarray(rho) <= 0):
        raise InvalidInputError("rho must be positive")
    if isinstance(m, Mesh):
        return m.ball_volume_at(m.as_points(x)[0], rho)
    m.as_points(x)
    out = m.ball_volume(rho)
    return float(out) if np.ndim(out) == 0 else out


def _ball_centers(m, centers, seed):
    if centers is not None:
        return m.as_points(centers)
    if isinstance(m, Mesh):
        k = min(32, m.n_vertices)
        return np.sort(rng_from_seed(seed).choice(m.n_vertices, size=k, replace=False))
    return candidate_pool(m, 1, seed)


def ball_constants(m, rho_grid, centers=None, seed=0):
    """Empirical volume-growth constants (a1, a2, c) and multiplicity bound N_M.

    a1/a2 are min/max of |B(x, rho)| / rho^d over centers and the grid; c is
    the smallest doubling constant consistent with all sampled pairs
    sigma < lambda at the same center, floored at 1 (the sigma -> lambda limit).
    """
    grid = np.sort(np.asarray(rho_grid, dtype=float).ravel())
    if grid.size == 0:
        raise InvalidInputError("rho grid is empty")
    if np.any(grid <= 0) or np.any(grid >= m.injectivity_radius):
        raise InvalidInputError("every rho must lie in (0, injectivity radius)")
    d = m.dimension
    vols = []
    for x in _ball_centers(m, centers, seed):
        vols.append([ball_volume(m, x, r) for r in grid])
    vols = np.asarray(vols)
    ratio = vols / grid ** d
    c = 1.0
    for i in range(grid.size):
        for j in range(i + 1, grid.size):
            s, lam = grid[i], grid[j]
            with np.errstate(divide="ignore"):
                need = vols[:, j] * s ** d / (lam ** d * vols[:, i])
            c = max(c, float(np.max(need)))
    a1, a2 = float(ratio.min()), float(ratio.max())
    if a1 <= 0:
        raise InvalidInputError("grid too fine for the mesh: empty balls")
    return BallConstants(a1, a2, c, 12 ** d * c * a2 / a1)


def quadrature(m, resolution):
    """Quadrature rule whose weights sum to the total volume."""
    n = int(resolution)
    if n < 1:
        raise InvalidInputError("resolution must be >= 1")
    if isinstance(m, Circle):
        L = m.circumference
        return QuadratureRule(np.arange(n) * (L / n), np.full(n, L / n))
    if isinstance(m, FlatTorus):
        axes = [np.arange(n) * (L / n) for L in m.lengths]
        grids = np.meshgrid(*axes, indexing="ij")
        nodes = np.column_stack([g.ravel() for g in grids])
        return QuadratureRule(nodes, np.full(len(nodes), m.volume / n ** m.dimension))
    if isinstance(m, Sphere2):
        z, wz = np.polynomial.legendre.leggauss(n)
        phi = np.arange(2 * n) * (math.pi / n)
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - zz ** 2)
        nodes = np.column_stack([(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), zz.ravel()])
        weights = np.repeat(wz * (math.pi / n), 2 * n)
        return QuadratureRule(nodes, weights)
    if isinstance(m, Mesh):
        return QuadratureRule(np.arange(m.n_vertices), m.mass.copy())
    raise InvalidInputError(f"no quadrature for {m.kind}")


def candidate_pool(m, n, seed):
    """``n`` points uniform in Riemannian measure, deterministic in ``seed``."""
    n = int(n)
    if n < 1:
        raise InvalidInputError("pool size must be >= 1")
    rng = rng_from_seed(seed)
    if isinstance(m, Circle):
        return rng.uniform(0.0, m.circumference, size=n)
    if isinstance(m, FlatTorus):
        u = rng.uniform(size=(n, m.dimension)) * np.asarray(m.lengths)
        return np.minimum(u, np.nextafter(np.asarray(m.lengths), 0))
    if isinstance(m, Sphere2):
        g = rng.standard_normal(size=(n, 3))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if isinstance(m, Mesh):
        if n >= m.n_vertices:
            return np.arange(m.n_vertices)
        p = m.mass / m.mass.sum()
        return np.sort(rng.choice(m.n_vertices, size=n, replace=False, p=p))
    raise InvalidInputError(f"no candidate pool for {m.kind}")
