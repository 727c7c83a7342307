"""Sampling operators on lattices: frame bounds, reconstruction, gamma search."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidInputError, NotASamplingSetError, SearchFailure
from .lattices import default_pool_size, seeded_lattices
from .manifolds import rng_from_seed
from .spectra import BandlimitedFunction, count_eigenvalues, random_bandlimited

DEFAULT_TAU = 1e-6
GAMMA_RESOLUTION = 64
MAX_POOL = 8_000_000


@dataclass(frozen=True, eq=False)
class SamplingOperator:
    basis: object
    omega: float
    lattice: object
    matrix: np.ndarray
    singular_values: np.ndarray
    left: np.ndarray
    right_t: np.ndarray
    full_rank: bool

    @property
    def rho(self):
        return self.lattice.rho

    @property
    def n_points(self):
        return self.matrix.shape[0]

    @property
    def n_band(self):
        return self.matrix.shape[1]

    @property
    def scale(self):
        return self.rho ** self.basis.manifold.dimension

    @property
    def sigma_max(self):
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    @property
    def sigma_min(self):
        return float(self.singular_values[-1]) if self.singular_values.size else 0.0

    @property
    def upper_bound(self):
        return self.scale * self.sigma_max ** 2

    @property
    def lower_bound(self):
        return self.scale * self.sigma_min ** 2 if self.full_rank else 0.0

    @property
    def cond(self):
        return self.sigma_max / self.sigma_min if self.full_rank else math.inf

    def report(self):
        return {
            "omega": float(self.omega),
            "rho": float(self.rho),
            "n_points": int(self.n_points),
            "n_band": int(self.n_band),
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "B_lower": self.lower_bound,
            "B_upper": self.upper_bound,
            "cond": self.cond if math.isfinite(self.cond) else None,
        }


def sampling_operator(b, omega, lat):
    """U[j, l] = u_l(x_j) for eigenvalues <= omega, with its SVD.

    Frame bounds are rho^d * sigma^2. The operator has full column rank when
    sigma_min exceeds max(shape) * eps * sigma_max; fewer rows than columns
    always means rank deficiency.
    """
    if lat.manifold is not b.manifold:
        raise InvalidInputError("lattice and basis live on different manifolds")
    n = count_eigenvalues(b, omega)
    U = b.evaluate(lat.points, n)
    left, sv, right_t = np.linalg.svd(U, full_matrices=False)
    if U.shape[0] < n:
        sv = np.concatenate([sv, np.zeros(n - U.shape[0])])
    tol = max(U.shape) * np.finfo(float).eps * (sv[0] if sv.size else 0.0)
    full = U.shape[0] >= n and sv.size > 0 and sv[-1] > tol
    return SamplingOperator(b, float(omega), lat, U, sv, left, right_t, bool(full))


def reconstruct(op, samples):
    """Least-squares band coefficients from lattice samples (SVD pseudo-inverse)."""
    y = np.asarray(samples, dtype=float).ravel()
    if y.size != op.n_points:
        raise InvalidInputError(f"expected {op.n_points} samples, got {y.size}")
    if not op.full_rank:
        raise NotASamplingSetError(
            f"not a sampling set: sigma_min={op.sigma_min:.3e}, need at least "
            f"{op.n_band} well-spread points (have {op.n_points})",
            sigma_min=op.sigma_min, required_points=op.n_band)
    r = op.singular_values.size
    coeffs = op.right_t.T @ ((op.left[:, :r].T @ y) / op.singular_values)
    return BandlimitedFunction(op.basis, op.omega, coeffs)


class PlancherelPolya(NamedTuple):
    empirical: float
    exact: float


def pp_constant(op, trials, seed):
    """Discrete-norm constant C1 with ||f|| <= C1 rho^{d/2} ||f(x_j)||_2.

    ``exact`` is the extremal value (rho^d sigma_min^2)^{-1/2}; ``empirical``
    is the largest ratio over random band-limited trial functions and can
    only under-estimate it.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if not op.full_rank:
        raise NotASamplingSetError("operator is rank deficient", sigma_min=op.sigma_min,
                                   required_points=op.n_band)
    rng = rng_from_seed(seed)
    c = rng.standard_normal((op.n_band, int(trials)))
    ratios = np.linalg.norm(c, axis=0) / (math.sqrt(op.scale) * np.linalg.norm(op.matrix @ c, axis=0))
    return PlancherelPolya(float(ratios.max()), 1 / math.sqrt(op.lower_bound))


def _passes(b, m, omega, gamma, trials, seed, tau, pool_size):
    rho = gamma / math.sqrt(omega)
    n = pool_size or default_pool_size(m, rho)
    if n > MAX_POOL:
        raise SearchFailure(f"gamma={gamma:.4f} needs a pool of {n} points (cap {MAX_POOL})")
    for lat in seeded_lattices(m, rho, trials, seed, pool_size=n):
        op = sampling_operator(b, omega, lat)
        if not op.full_rank or op.lower_bound < tau * op.upper_bound:
            return False
    return True


def find_gamma(b, m, omega, trials=8, seed=0, tau=DEFAULT_TAU, resolution=GAMMA_RESOLUTION,
               pool_size=None):
    """Largest gamma on the grid {j / resolution} for which every lattice at
    rho = gamma * omega^{-1/2} gives B_lower >= tau * B_upper.

    This is an empirical gamma: bisection assumes the pass/fail predicate is
    monotone in gamma. The search starts at gamma_hi = min(1, r * sqrt(omega))
    with r the injectivity radius. Lattices are the same seeded family used
    by ``lattice_extremes``.
    """
    if omega < 0:
        raise InvalidInputError("omega must be >= 0")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if not 0 < tau <= 1:
        raise InvalidInputError("tau must lie in (0, 1]: B_lower never exceeds B_upper")
    gamma_hi = 1.0 if omega == 0 else min(1.0, m.injectivity_radius * math.sqrt(omega))
    if count_eigenvalues(b, omega) == 1:
        return gamma_hi
    hi = int(math.floor(gamma_hi * resolution + 1e-12))
    if hi < 1:
        raise SearchFailure(f"gamma grid is empty below gamma_hi={gamma_hi:.4g}")

    def ok(j):
        return _passes(b, m, omega, j / resolution, trials, seed, tau, pool_size)

    if ok(hi):
        return hi / resolution
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    if lo == 0:
        # the loop ends with hi == 1, so gamma = 1/resolution already failed
        raise SearchFailure(
            f"no gamma >= 1/{resolution} passed tau={tau:g} at omega={omega:g} "
            f"over {trials} lattices")
    return lo / resolution


def poincare_ratio(f, lat, k):
    """||f|| / (rho^{d/2} ||f(x_j)||_2 + rho^k ||Delta^{k/2} f||)."""
    d = lat.manifold.dimension
    samples = f(lat.points)
    denom = lat.rho ** (d / 2) * np.linalg.norm(samples) + lat.rho ** k * f.power_norm(k / 2)
    return f.norm / denom


def poincare_constant(b, m, lat, k, trials, seed, bands=None):
    """Largest Poincare ratio over random band-limited trial functions.

    Trial functions cycle through ``bands`` (default: lambda_max / 16,
    lambda_max / 4 and lambda_max).
    """
    if k <= m.dimension / 2:
        raise InvalidInputError("need k > d/2")
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if bands is None:
        bands = [b.lambda_max / 16, b.lambda_max / 4, b.lambda_max]
    bands = [float(w) for w in bands]
    if any(w > b.lambda_max for w in bands):
        raise InvalidInputError("trial bands must not exceed lambda_max")
    best = 0.0
    for i in range(int(trials)):
        f = random_bandlimited(b, bands[i % len(bands)], seed + i)
        best = max(best, poincare_ratio(f, lat, k))
    return best
