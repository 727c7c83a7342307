"""Laplace-Beltrami eigenpairs (analytic models and cotangent meshes).

Counting convention: an eigenvalue belongs to the band [0, omega] when
``lam <= omega * (1 + BAND_RTOL)``. Ties at the band edge are included; the
relative slack only absorbs rounding in eigenvalues like (2*pi*k/L)**2.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from . import accel, meshes
from .errors import InvalidInputError, NumericalFailure, OutOfBandError, UnsupportedModelError
from .manifolds import Circle, FlatTorus, Mesh, Sphere2

BAND_RTOL = 1e-12
DENSE_MESH_LIMIT = 3000
MULTIPLICITY_RTOL = 1e-6


def in_band(lam, omega):
    return np.asarray(lam) <= omega * (1 + BAND_RTOL) + BAND_RTOL * (omega == 0)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    manifold: object
    eigenvalues: np.ndarray
    lambda_max: float
    provenance: str
    evaluator: Callable = field(repr=False)
    truncated: bool = False
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self):
        return len(self.eigenvalues)

    def band_size(self, omega):
        return int(np.count_nonzero(in_band(self.eigenvalues, omega)))

    def evaluate(self, points, n=None):
        """Matrix U[j, l] = u_l(x_j) for the first ``n`` eigenfunctions."""
        n = self.size if n is None else int(n)
        pts = self.manifold.as_points(points)
        if n == 0:
            return np.zeros((len(pts), 0))
        return self.evaluator(pts, n)

    def eigenfunction(self, index, x):
        if not 0 <= index < self.size:
            raise InvalidInputError(f"eigenfunction index {index} outside [0, {self.size})")
        return self.evaluate(x, index + 1)[:, index]

    def multiplicities(self, rtol=MULTIPLICITY_RTOL):
        """Group eigenvalues within relative ``rtol``: list of (value, count)."""
        groups = []
        for lam in self.eigenvalues:
            if groups and abs(lam - groups[-1][0]) <= rtol * max(abs(lam), 1.0):
                groups[-1][1] += 1
            else:
                groups.append([float(lam), 1])
        return [tuple(g) for g in groups]

    def to_dict(self):
        out = {
            "manifold": self.manifold.describe(),
            "lambda_max": float(self.lambda_max),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "provenance": self.provenance,
            "truncated": bool(self.truncated),
        }
        if self.eigenvectors is not None:
            out["eigenvectors"] = self.eigenvectors.tolist()
        return out


def basis_from_dict(data, manifold):
    """Rebuild a basis from ``to_dict`` output; eigenfunctions are re-evaluated."""
    if data["provenance"] == "analytic":
        return analytic_basis(manifold, data["lambda_max"])
    if not isinstance(manifold, Mesh):
        raise InvalidInputError("mesh basis needs the mesh it was computed on")
    vecs = np.asarray(data["eigenvectors"], dtype=float)
    if vecs.shape[0] != manifold.n_vertices:
        raise InvalidInputError("eigenvector rows do not match the mesh vertex count")
    return _mesh_basis_from_arrays(manifold, np.asarray(data["eigenvalues"]), vecs)


def _circle_basis(m, lambda_max):
    L = m.circumference
    freq = 2 * math.pi / L
    kmax = int(math.floor(math.sqrt(lambda_max) / freq)) + 1
    while kmax > 0 and not in_band((freq * kmax) ** 2, lambda_max):
        kmax -= 1
    ks = [0] + [k for k in range(1, kmax + 1) for _ in (0, 1)]
    evals = np.array([(freq * k) ** 2 for k in ks])

    def evaluator(pts, n):
        x = pts[:, 0]
        out = np.empty((len(x), n))
        out[:, 0] = 1 / math.sqrt(L)
        amp = math.sqrt(2 / L)
        for col in range(1, n):
            k = (col + 1) // 2
            trig = np.cos if col % 2 else np.sin
            out[:, col] = amp * trig(freq * k * x)
        return out

    return evals, evaluator


def _torus_basis(m, lambda_max):
    L = np.asarray(m.lengths)
    freq = 2 * math.pi / L
    bounds = [int(math.floor(math.sqrt(lambda_max) / f)) + 1 for f in freq]
    modes = []
    for n in itertools.product(*[range(-b, b + 1) for b in bounds]):
        lam = float(sum((f * k) ** 2 for f, k in zip(freq, n)))
        if in_band(lam, lambda_max):
            modes.append((lam, tuple(abs(k) for k in n), n))
    modes.sort()
    evals = np.array([mode[0] for mode in modes])
    idx = np.array([mode[2] for mode in modes], dtype=np.int64).reshape(len(modes), len(L))

    def evaluator(pts, n):
        out = np.ones((len(pts), n))
        for a in range(len(L)):
            k = idx[:n, a]
            arg = freq[a] * np.abs(k)[None, :] * pts[:, a, None]
            val = np.where(k > 0, np.sqrt(2) * np.cos(arg),
                           np.where(k < 0, np.sqrt(2) * np.sin(arg), 1.0))
            out *= val / math.sqrt(L[a])
        return out

    return evals, evaluator


def _sphere_basis(lambda_max):
    lmax = int(math.floor((-1 + math.sqrt(1 + 4 * lambda_max)) / 2)) + 1
    while lmax >= 0 and not in_band(lmax * (lmax + 1), lambda_max):
        lmax -= 1
    evals = np.concatenate([np.full(2 * l + 1, float(l * (l + 1))) for l in range(lmax + 1)])

    def evaluator(pts, n):
        lneed = int(math.ceil(math.sqrt(n))) - 1
        z = np.clip(pts[:, 2], -1.0, 1.0)
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        return accel.real_sph_harm(z, phi, lneed)[:, :n]

    return evals, evaluator


def analytic_basis(m, lambda_max):
    """All eigenpairs with eigenvalue <= lambda_max, with multiplicity.

    Circle: 1/sqrt(L), sqrt(2/L) cos(2 pi k x / L), sqrt(2/L) sin(...).
    Flat torus: tensor products of the per-axis circle functions.
    Sphere: real orthonormal harmonics ordered by degree l, then m = -l..l,
    with sqrt(2) P_lm cos(m phi) for m > 0 and sqrt(2) P_l|m| sin(|m| phi)
    for m < 0 (no Condon-Shortley phase).
    """
    if lambda_max < 0:
        raise InvalidInputError("lambda_max must be >= 0")
    if isinstance(m, Circle):
        evals, ev = _circle_basis(m, lambda_max)
    elif isinstance(m, FlatTorus):
        evals, ev = _torus_basis(m, lambda_max)
    elif isinstance(m, Sphere2):
        evals, ev = _sphere_basis(lambda_max)
    else:
        raise UnsupportedModelError(f"no analytic spectrum for {getattr(m, 'kind', m)!r}")
    return SpectralBasis(m, evals, float(lambda_max), "analytic", ev)


def _fix_signs(vecs):
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1
    return vecs * signs


def _mesh_basis_from_arrays(m, evals, vecs):
    vecs = np.ascontiguousarray(vecs)

    def evaluator(pts, n):
        return vecs[pts, :n]

    return SpectralBasis(m, np.asarray(evals, dtype=float), float(evals[-1]), "mesh-discrete",
                         evaluator, truncated=True, eigenvectors=vecs)


def _grounded_solver(S, mass):
    """Solve S x = b on the D-orthogonal complement of constants.

    S is singular (constants span its kernel on a connected mesh); pinning
    vertex 0 gives a nonsingular system whose solution is then shifted to
    zero D-mean.
    """
    n = S.shape[0]
    lu = splu(S[1:, 1:].tocsc())
    total = mass.sum()

    def solve(b):
        b = np.asarray(b, dtype=float).ravel()
        b = b - mass * (b.sum() / total)
        x = np.zeros(n)
        x[1:] = lu.solve(b[1:])
        return x - (mass @ x) / total

    return LinearOperator((n, n), matvec=solve, dtype=float)


def mesh_basis(m, k, dense_limit=DENSE_MESH_LIMIT, tol=0.0, maxiter=None):
    """k smallest eigenpairs of S v = lam D v (cotangent stiffness, lumped mass).

    Meshes with fewer than ``dense_limit`` vertices use a dense generalized
    symmetric solver; larger meshes use shift-invert Lanczos about 0 with the
    constant kernel deflated. Eigenvectors are D-orthonormal.
    """
    if not isinstance(m, Mesh):
        raise UnsupportedModelError("mesh_basis needs a Mesh model")
    k = int(k)
    if not 1 <= k <= m.n_vertices:
        raise InvalidInputError(f"k must lie in [1, {m.n_vertices}]")
    S = meshes.cotangent_stiffness(m.vertices, m.faces, m.period)
    mass = m.mass
    if m.n_vertices < dense_limit or k >= m.n_vertices - 1:
        evals, vecs = scipy.linalg.eigh(S.toarray(), np.diag(mass), subset_by_index=[0, k - 1])
    else:
        const = np.full((m.n_vertices, 1), 1 / math.sqrt(mass.sum()))
        if k == 1:
            evals, vecs = np.zeros(1), const
        else:
            try:
                ev, vv = eigsh(S, k=k - 1, M=sp.diags(mass), sigma=0.0, which="LM",
                               OPinv=_grounded_solver(S, mass), tol=tol, maxiter=maxiter)
            except ArpackNoConvergence as exc:
                raise NumericalFailure(
                    f"shift-invert Lanczos did not converge: {len(exc.eigenvalues)} of "
                    f"{k - 1} eigenpairs after maxiter={maxiter}") from exc
            order = np.argsort(ev)
            evals = np.concatenate([[0.0], ev[order]])
            vecs = np.hstack([const, vv[:, order]])
    if evals[0] < -1e-9 * max(1.0, abs(evals[-1])):
        raise NumericalFailure(f"negative eigenvalue {evals[0]:.3e} from a PSD problem")
    evals = np.where(evals < 0, 0.0, evals)
    # renormalize in the lumped inner product
    vecs = vecs / np.sqrt(np.einsum("ij,i,ij->j", vecs, mass, vecs))
    return _mesh_basis_from_arrays(m, evals, _fix_signs(vecs))


def count_eigenvalues(b, omega):
    """N_omega: eigenvalues <= omega counted with multiplicity."""
    if omega < 0:
        raise InvalidInputError("omega must be >= 0")
    if omega > b.lambda_max * (1 + BAND_RTOL):
        raise OutOfBandError(f"omega={omega} exceeds the basis threshold {b.lambda_max}")
    return b.band_size(omega)


@dataclass(frozen=True, eq=False)
class BandlimitedFunction:
    basis: SpectralBasis
    omega: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size != self.basis.band_size(self.omega):
            raise InvalidInputError("coefficient count must equal N_omega")
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self):
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, points):
        return self.basis.evaluate(points, self.coeffs.size) @ self.coeffs

    def power_norm(self, s):
        """||Delta^s f|| computed spectrally."""
        lam = self.basis.eigenvalues[: self.coeffs.size]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(lam > 0, lam ** s, 0.0 if s > 0 else 1.0)
        return float(np.linalg.norm(w * self.coeffs))


def bernstein_ratio(f, k):
    """||Delta^k f|| / ||f||; at most omega**k for f in the band."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if f.norm == 0:
        raise InvalidInputError("zero function")
    return f.power_norm(k) / f.norm


def random_bandlimited(b, omega, seed):
    """Gaussian coefficients on the band, normalized to unit L2 norm."""
    n = count_eigenvalues(b, omega)
    from .manifolds import rng_from_seed

    c = rng_from_seed(seed).standard_normal(n)
    return BandlimitedFunction(b, omega, c / np.linalg.norm(c))
