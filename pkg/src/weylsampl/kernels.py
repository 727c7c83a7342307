"""Spectral kernels: multipliers F(t sqrt(Delta)), heat kernel, spectral function.

Every sum is truncated at the basis threshold lambda_max. Operations refuse
to run when the discarded tail is not certified small.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import FitFailure, InvalidInputError, OutOfBandError, TruncationUnsafeError
from .manifolds import Mesh, ball_volume
from .spectra import BAND_RTOL, count_eigenvalues, in_band

HEAT_TAIL = 1e-12
KERNEL_TAIL_TOL = 1e-8
S_FLOOR = 4.0
C_GRID = np.round(np.arange(1, 41) * 0.05, 10)
FIT_RTOL = 1e-9


@dataclass(frozen=True)
class SpectralMultiplier:
    """A nonnegative function F on [0, inf) with a tail certificate.

    ``support``: F vanishes beyond it. ``tail(x)`` bounds sup_{y >= x} F(y).
    Without either, kernels cannot certify truncation and will refuse.
    """

    func: Callable
    support: float = math.inf
    tail: Optional[Callable] = field(default=None, compare=False)
    name: str = ""

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.func(x), dtype=float)
        return np.where(x > self.support, 0.0, np.broadcast_to(out, x.shape))

    def tail_bound(self, x):
        if x > self.support:
            return 0.0
        if self.tail is None:
            return math.inf
        return float(self.tail(x))


def indicator(s):
    """chi_[0, s], closed at s."""
    s = float(s)
    slack = s * BAND_RTOL
    return SpectralMultiplier(lambda x: (x <= s + slack).astype(float), support=s + slack,
                              name=f"indicator[0,{s:g}]")


def gaussian(scale=1.0, amplitude=1.0):
    """amplitude * exp(-(x / scale)^2), decreasing so its own value bounds the tail."""
    f = lambda x: amplitude * np.exp(-((np.asarray(x, dtype=float) / scale) ** 2))
    return SpectralMultiplier(f, tail=lambda x: float(f(x)), name=f"gaussian({scale:g},{amplitude:g})")


def zero_multiplier():
    return SpectralMultiplier(lambda x: np.zeros_like(x), support=0.0, name="zero")


class KernelValue(NamedTuple):
    value: np.ndarray
    tail_bound: float


def _diag_sum(b, weights, points):
    U = b.evaluate(points, weights.size)
    # fixed ascending-l summation order
    return (U * U) @ weights


def _scalar(v):
    v = np.asarray(v)
    return float(v[0]) if v.size == 1 else v


def kernel_diag(b, F, t, x, tail_tol=KERNEL_TAIL_TOL):
    """K^F_t(x, x) = sum_l F(t sqrt(lambda_l)) u_l(x)^2 up to lambda_max.

    The tail bound is F's certificate at t sqrt(lambda_max) times the number
    of retained eigenvalues (a crude stand-in for the tail count).
    """
    if not t > 0:
        raise InvalidInputError("t must be positive")
    lam = b.eigenvalues
    tail = F.tail_bound(t * math.sqrt(b.lambda_max)) * max(b.size, 1)
    if tail > tail_tol:
        raise TruncationUnsafeError(
            f"tail bound {tail:.3e} exceeds {tail_tol:.1e} for {F.name or 'F'} at t={t:g}")
    w = F(t * np.sqrt(np.maximum(lam, 0.0)))
    if np.any(w < 0):
        raise InvalidInputError("multiplier must be nonnegative")
    return KernelValue(_scalar(_diag_sum(b, w, x)), tail)


def t_min(b):
    """Smallest t with exp(-t lambda_max) N_{lambda_max} <= 1e-12."""
    if b.lambda_max <= 0:
        return math.inf
    return math.log(b.size / HEAT_TAIL) / b.lambda_max


def _heat_weights(b, t, literal=False):
    lam = b.eigenvalues
    if literal:
        # exp(-t lambda^2): the squared form; its tail is far smaller, so the
        # same t_min guard is conservative
        return np.exp(-t * lam * lam)
    return np.exp(-t * lam)


def _check_heat(b, t):
    if not t > 0:
        raise InvalidInputError("t must be positive")
    tm = t_min(b)
    if t < tm:
        raise TruncationUnsafeError(f"t={t:g} is below t_min={tm:.4g} for lambda_max={b.lambda_max:g}")


def heat_diag(b, t, x, literal=False):
    """p_t(x, x) = sum_l exp(-t lambda_l) u_l(x)^2."""
    _check_heat(b, t)
    return _scalar(_diag_sum(b, _heat_weights(b, t, literal), x))


def heat_kernel(b, t, x, y):
    """Off-diagonal p_t(x_i, y_i) for paired points."""
    _check_heat(b, t)
    w = _heat_weights(b, t)
    Ux = b.evaluate(x, w.size)
    Uy = b.evaluate(y, w.size)
    if Ux.shape != Uy.shape:
        raise InvalidInputError("x and y must have the same number of points")
    return (Ux * Uy) @ w


def heat_trace(b, t, quad):
    """(sum_l exp(-t lambda_l), quadrature of p_t(x, x))."""
    _check_heat(b, t)
    spectral = float(np.sum(_heat_weights(b, t)))
    diag = np.atleast_1d(heat_diag(b, t, quad.nodes))
    return spectral, float(np.dot(quad.weights, diag))


def spectral_function(b, s, x):
    """e(s; x) = sum over lambda_l <= s of u_l(x)^2."""
    if s > b.lambda_max * (1 + BAND_RTOL):
        raise OutOfBandError(f"s={s:g} exceeds lambda_max={b.lambda_max:g}")
    n = count_eigenvalues(b, s)
    return _scalar(_diag_sum(b, np.ones(n), x))


def _ball_volumes(m, points, r):
    if isinstance(m, Mesh):
        return np.array([ball_volume(m, p, r) for p in m.as_points(points)])
    return np.full(len(m.as_points(points)), ball_volume(m, m.as_points(points)[:1], r))


def spectral_function_bounds(b, m, s_grid, points, radius="sqrt", s_floor=S_FLOOR):
    """(A1, A2) = min / max of e(s; x) |B(x, r(s))| over the grid.

    r(s) = s^{-1/2} by default; ``radius="literal"`` uses s^{-1}.
    """
    grid = np.asarray(s_grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidInputError("s grid is empty")
    if np.any(grid < s_floor):
        raise InvalidInputError(f"every s must be >= s_floor={s_floor:g}")
    if radius not in ("sqrt", "literal"):
        raise InvalidInputError("radius must be 'sqrt' or 'literal'")
    vals = []
    for s in grid:
        r = s ** -0.5 if radius == "sqrt" else 1 / s
        e = np.atleast_1d(spectral_function(b, s, points))
        vals.append(e * _ball_volumes(m, points, r))
    vals = np.concatenate(vals)
    return float(vals.min()), float(vals.max())


def kernel_monotonicity_check(b, F1, F2, t, points):
    """True iff K^{F1}_t(x, x) <= K^{F2}_t(x, x) + 1e-12 at every point.

    The hypothesis F1 <= F2 is checked on the values t sqrt(lambda_l).
    """
    grid = t * np.sqrt(np.maximum(b.eigenvalues, 0.0))
    f1, f2 = F1(grid), F2(grid)
    if np.any(f1 < 0) or np.any(f1 > f2):
        raise InvalidInputError("need 0 <= F1 <= F2 on the spectrum")
    k1 = np.atleast_1d(kernel_diag(b, F1, t, points).value)
    k2 = np.atleast_1d(kernel_diag(b, F2, t, points).value)
    return bool(np.all(k1 <= k2 + 1e-12 * np.maximum(1.0, np.abs(k2))))


class GaussianFit(NamedTuple):
    C1: float
    c1: float
    C2: float
    c2: float
    ok: bool
    n_used: int


def _pair_points(m, pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2:
        return m.as_points(pairs[0]), m.as_points(pairs[1])
    if isinstance(m, Mesh):
        arr = np.asarray(pairs, dtype=np.int64)
        return arr[:, 0], arr[:, 1]
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim == 2:
        return m.as_points(arr[:, 0]), m.as_points(arr[:, 1])
    return m.as_points(arr[:, 0]), m.as_points(arr[:, 1])


def gaussian_bound_fit(b, m, t_grid, point_pairs, c_grid=C_GRID):
    """Fit C1 t^{-d/2} e^{-c1 D^2/t} <= p_t(x, y) <= C2 t^{-d/2} e^{-c2 D^2/t}.

    ``point_pairs`` is (xs, ys). Only values above ten times their error
    estimate (truncation tail plus rounding) are used. c2 is the largest grid
    value whose C2 equals the smallest achievable C2. c1 is the smallest grid
    value, among those with c1 >= c2 and C1 <= C2, attaining the largest C1,
    so the two envelopes nest at every distance. For fixed c the optimal C
    is a closed-form max / min over the data.
    """
    xs, ys = _pair_points(m, point_pairs)
    d = m.dimension
    dist = np.atleast_1d(np.asarray(_distances(m, xs, ys), dtype=float))
    rows = []
    for t in np.asarray(t_grid, dtype=float).ravel():
        _check_heat(b, t)
        w = _heat_weights(b, t)
        Ux = b.evaluate(xs, w.size)
        Uy = b.evaluate(ys, w.size)
        terms = Ux * Uy * w
        p = terms.sum(axis=1)
        umax = max(np.abs(Ux).max(), np.abs(Uy).max())
        tail = math.exp(-t * b.lambda_max) * b.size * umax ** 2
        err = tail + w.size * np.finfo(float).eps * np.abs(terms).sum(axis=1)
        for i in range(len(p)):
            if abs(p[i]) > 10 * err[i]:
                if p[i] < 0:
                    raise FitFailure(f"negative heat kernel p={p[i]:.3e} at t={t:g}, pair {i}")
                rows.append((t, dist[i] ** 2, p[i]))
    if not rows:
        raise FitFailure("no (t, pair) value is reliably above its truncation error")
    t, D2, p = (np.array(v) for v in zip(*rows))
    base = p * t ** (d / 2)
    c = np.asarray(c_grid, dtype=float)
    expo = np.exp(np.outer(c, D2 / t))
    C2s = (base * expo).max(axis=1)
    C1s = (base * expo).min(axis=1)
    k2 = int(np.nonzero(C2s <= C2s.min() * (1 + FIT_RTOL))[0].max())
    C2 = float(C2s[k2])
    # the lower envelope must sit under the upper one for every distance:
    # c1 >= c2 and C1 <= C2
    admissible = (np.arange(c.size) >= k2) & (C1s <= C2 * (1 + FIT_RTOL))
    if not np.any(admissible):
        raise FitFailure(f"no lower envelope fits under C2={C2:.4g}, c2={c[k2]:g}")
    best = C1s[admissible].max()
    k1 = int(np.nonzero(admissible & (C1s >= best * (1 - FIT_RTOL)))[0].min())
    C1 = float(C1s[k1])
    ok = bool(0 < C1 <= C2 * (1 + FIT_RTOL) and C2 < math.inf)
    return GaussianFit(C1, float(c[k1]), C2, float(c[k2]), ok, len(rows))


def _distances(m, xs, ys):
    if isinstance(m, Mesh):
        return np.array([m.distance(int(a), int(b)) for a, b in zip(xs, ys)])
    from .manifolds import geodesic_distance

    return geodesic_distance(m, xs, ys)


def counting_identity_check(b, quad, omega):
    """|quadrature of e(omega; .) - N_omega|."""
    n = count_eigenvalues(b, omega)
    e = np.atleast_1d(spectral_function(b, omega, quad.nodes))
    return abs(float(np.dot(quad.weights, e)) - n)


@dataclass(frozen=True)
class HeatDiagnostics:
    manifold: dict
    t_grid: list
    trace_spectral: list
    trace_quadrature: list
    diag: list  # diag[i][j] = p_{t_i}(x_j, x_j)
    truncation: list
    fit: Optional[GaussianFit] = None
    seed: int = 0

    def to_dict(self):
        out = {
            "manifold": self.manifold,
            "seed": int(self.seed),
            "t_grid": [float(t) for t in self.t_grid],
            "trace_spectral": [float(v) for v in self.trace_spectral],
            "trace_quadrature": [float(v) for v in self.trace_quadrature],
            "diag": [[float(v) for v in row] for row in self.diag],
            "truncation": [float(v) for v in self.truncation],
            "fit": None,
        }
        if self.fit is not None:
            out["fit"] = {k: (bool(v) if k == "ok" else (int(v) if k == "n_used" else float(v)))
                          for k, v in self.fit._asdict().items()}
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x_id", "p_diag", "trace_spectral", "trace_quadrature"])
        for i, t in enumerate(self.t_grid):
            for j, v in enumerate(self.diag[i]):
                w.writerow([repr(float(t)), j, repr(float(v)), repr(float(self.trace_spectral[i])),
                            repr(float(self.trace_quadrature[i]))])
        return buf.getvalue()


def heat_diagnostics(b, m, t_grid, points, quad, fit_pairs=None, seed=0):
    """Trace, diagonal values and (optionally) a Gaussian-bound fit on a t grid."""
    ts = sorted(float(t) for t in np.asarray(t_grid, dtype=float).ravel())
    if not ts:
        raise InvalidInputError("t grid is empty")
    spec, quadv, diag, trunc = [], [], [], []
    for t in ts:
        s, q = heat_trace(b, t, quad)
        spec.append(s)
        quadv.append(q)
        diag.append(np.atleast_1d(heat_diag(b, t, points)).tolist())
        trunc.append(math.exp(-t * b.lambda_max) * b.size)
    fit = gaussian_bound_fit(b, m, ts, fit_pairs) if fit_pairs is not None else None
    return HeatDiagnostics(m.describe(), ts, spec, quadv, diag, trunc, fit, seed)
