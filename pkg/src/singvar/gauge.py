"""Arithmetic and asymptotic classification for epsilon-net scalars.

A scalar here is a finite net of real samples x_eps indexed by a decreasing
grid of epsilon values, together with a gauge rho_eps fixing the asymptotic
scale.  Equality, positivity and order-of-magnitude statements about such
scalars are all asymptotic statements about the net, so every predicate in
this module is an empirical surrogate evaluated on the tail of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    GridMismatchError,
    InsufficientDataError,
    InvertibilityError,
    ValidationError,
)

# Tail length used by all slope regressions; shorter grids use what they have.
TAIL_LEN = 8
# Slope threshold separating infinitesimal/infinite from finite behaviour.
SIGMA_MIN = 0.1
# Slope threshold below which a net decays slower than every gauge power.
SIGMA_FAR = 0.05
# Largest witness exponent searched by strict positivity.
M_MAX = 20
# Max absolute log-residual tolerated before a power-law fit is rejected.
FIT_RESIDUAL_TOL = 0.5


class GaugeKind(str, Enum):
    POWER = "power"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class Gauge:
    """A decreasing epsilon grid plus the scale net rho_eps evaluated on it."""

    kind: GaugeKind = GaugeKind.POWER
    eps_grid: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.eps_grid:
            raise ValidationError("eps_grid must be non-empty")
        eps = np.asarray(self.eps_grid, dtype=float)
        if np.any(eps <= 0.0) or np.any(eps > 1.0):
            raise ValidationError("eps_grid entries must lie in (0, 1]")
        if np.any(np.diff(eps) >= 0.0):
            raise ValidationError("eps_grid must be strictly decreasing")
        object.__setattr__(self, "eps_grid", tuple(float(e) for e in eps))

    def __len__(self):
        return len(self.eps_grid)

    @property
    def eps(self) -> np.ndarray:
        return np.asarray(self.eps_grid, dtype=float)

    def rho(self, eps=None) -> np.ndarray:
        """Scale net rho_eps on the grid (or at a given eps)."""
        e = self.eps if eps is None else np.asarray(eps, dtype=float)
        if self.kind is GaugeKind.POWER:
            return e
        return np.exp(-1.0 / e)

    def tail(self, n: int = TAIL_LEN) -> slice:
        n = min(n, len(self))
        return slice(len(self) - n, len(self))

    def index_of(self, eps: float) -> int:
        grid = self.eps
        i = int(np.argmin(np.abs(grid - eps)))
        if not math.isclose(grid[i], eps, rel_tol=1e-12, abs_tol=0.0):
            raise ValidationError(f"eps={eps!r} is not a grid point of this gauge")
        return i


def default_gauge(points: int = 12, kind: GaugeKind = GaugeKind.POWER) -> Gauge:
    """Geometric grid eps_k = 2^-(4+k), k = 0..points-1."""
    if points < 1:
        raise ValidationError("gauge needs at least one grid point")
    return Gauge(kind=kind, eps_grid=tuple(2.0 ** -(4 + k) for k in range(points)))


def gauge_from_range(eps_max: float, eps_min: float, points: int,
                     kind: GaugeKind = GaugeKind.POWER) -> Gauge:
    """Geometric grid with the given endpoints, largest eps first."""
    if points < 1:
        raise ValidationError("gauge needs at least one grid point")
    if points == 1:
        return Gauge(kind=kind, eps_grid=(eps_max,))
    grid = np.geomspace(eps_max, eps_min, points)
    return Gauge(kind=kind, eps_grid=tuple(float(e) for e in grid))


@dataclass(frozen=True)
class GenNumber:
    """One real sample per grid epsilon; the computable face of a net."""

    values: np.ndarray
    gauge: Gauge

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValidationError("GenNumber values must be a 1-D sample vector")
        if len(vals) != len(self.gauge):
            raise ValidationError("values length must equal the grid length")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("GenNumber samples must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, gauge: Gauge, fn) -> "GenNumber":
        return cls(np.array([fn(e) for e in gauge.eps_grid], dtype=float), gauge)

    @classmethod
    def constant(cls, gauge: Gauge, c: float) -> "GenNumber":
        return cls(np.full(len(gauge), float(c)), gauge)

    def abs(self) -> "GenNumber":
        return GenNumber(np.abs(self.values), self.gauge)


class Tag(str, Enum):
    INFINITESIMAL = "infinitesimal"
    INFINITE = "infinite"
    FINITE = "finite"
    UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class AsymptoticClass:
    tag: Tag
    slope: float
    confidence: float

    def __post_init__(self):
        if self.tag is not Tag.UNCLASSIFIED and not math.isfinite(self.slope):
            raise ValidationError("slope must be finite for a classified net")


def _check_same_grid(x: GenNumber, y: GenNumber):
    if x.gauge is y.gauge:
        return
    if x.gauge.kind != y.gauge.kind or x.gauge.eps_grid != y.gauge.eps_grid:
        raise GridMismatchError("operands live on different gauges or grids")


def gen_add(x: GenNumber, y: GenNumber) -> GenNumber:
    _check_same_grid(x, y)
    return GenNumber(x.values + y.values, x.gauge)


def gen_sub(x: GenNumber, y: GenNumber) -> GenNumber:
    _check_same_grid(x, y)
    return GenNumber(x.values - y.values, x.gauge)


def gen_mul(x: GenNumber, y: GenNumber) -> GenNumber:
    _check_same_grid(x, y)
    return GenNumber(x.values * y.values, x.gauge)


def gen_div(x: GenNumber, y: GenNumber) -> GenNumber:
    _check_same_grid(x, y)
    positive, _ = is_strictly_positive(y.abs())
    if not positive or np.any(y.values == 0.0):
        raise InvertibilityError("divisor is not strictly positive in modulus")
    return GenNumber(x.values / y.values, x.gauge)


_ARITH = {"+": gen_add, "-": gen_sub, "*": gen_mul, "/": gen_div}


def gen_arith(x: GenNumber, y: GenNumber, op: str) -> GenNumber:
    """Pointwise ring operation; op is one of '+', '-', '*', '/'."""
    try:
        fn = _ARITH[op]
    except KeyError:
        raise ValidationError(f"unknown operation {op!r}") from None
    return fn(x, y)


def _tail_regression(x: GenNumber, tail_len: int = TAIL_LEN):
    """Least-squares fit log|x_eps| = s*log(rho_eps) + c over the grid tail.

    Returns (slope, max abs residual, tail absolute values).  Zero samples
    make the log undefined and are reported via slope = +inf sentinel by the
    caller; here they raise so callers can special-case them.
    """
    sl = x.gauge.tail(tail_len)
    a = np.abs(x.values[sl])
    if np.any(a == 0.0):
        raise ZeroDivisionError
    logs = np.log(a)
    logr = np.log(x.gauge.rho()[sl])
    A = np.vstack([logr, np.ones_like(logr)]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = np.max(np.abs(logs - A @ coef))
    return float(coef[0]), float(resid), a


def classify(x: GenNumber, sigma_min: float = SIGMA_MIN,
             residual_tol: float = FIT_RESIDUAL_TOL,
             tail_len: int = TAIL_LEN) -> AsymptoticClass:
    """Tag a net as infinitesimal / infinite / finite from its tail decay.

    The slope s of log|x| against log(rho) estimates the exponent in
    |x_eps| ~ C rho_eps^s.  Monotonicity of the tail guards against
    oscillating nets that happen to fit a power law.
    """
    if len(x.gauge) < 4:
        raise InsufficientDataError("classification needs at least 4 grid points")
    sl = x.gauge.tail(tail_len)
    a = np.abs(x.values[sl])
    if np.all(a == 0.0):
        # Identically zero tail: below every gauge power on the evidence we have.
        return AsymptoticClass(Tag.INFINITESIMAL, slope=float(M_MAX), confidence=0.0)
    try:
        slope, resid, a = _tail_regression(x, tail_len)
    except ZeroDivisionError:
        return AsymptoticClass(Tag.UNCLASSIFIED, slope=math.nan, confidence=math.inf)
    if resid > residual_tol:
        return AsymptoticClass(Tag.UNCLASSIFIED, slope=math.nan, confidence=resid)
    decreasing = bool(np.all(np.diff(a) <= 0.0) and a[-1] < a[0])
    increasing = bool(np.all(np.diff(a) >= 0.0) and a[-1] > a[0])
    if slope >= sigma_min and decreasing:
        return AsymptoticClass(Tag.INFINITESIMAL, slope, resid)
    if slope <= -sigma_min and increasing:
        return AsymptoticClass(Tag.INFINITE, slope, resid)
    if abs(slope) < sigma_min:
        return AsymptoticClass(Tag.FINITE, slope, resid)
    return AsymptoticClass(Tag.UNCLASSIFIED, math.nan, resid)


def is_strictly_positive(x: GenNumber, m_max: int = M_MAX,
                         tail_len: int = TAIL_LEN) -> tuple[bool, int | None]:
    """Strict positivity with an explicit witness exponent.

    True iff some integer m <= m_max has x_eps > rho_eps^m on the grid tail;
    the smallest such m is returned as the witness.
    """
    sl = x.gauge.tail(tail_len)
    vals = x.values[sl]
    rho = x.gauge.rho()[sl]
    for m in range(0, m_max + 1):
        if np.all(vals > rho ** m):
            return True, m
    return False, None


def is_negligible_to_order(x: GenNumber, q: int, tail_len: int = TAIL_LEN) -> bool:
    """Empirical surrogate for x = 0 up to order q: |x_eps| <= rho_eps^q on the tail."""
    if q < 0:
        raise ValidationError("order q must be >= 0")
    sl = x.gauge.tail(tail_len)
    return bool(np.all(np.abs(x.values[sl]) <= x.gauge.rho()[sl] ** q))


def is_far_from(x: GenNumber, y: GenNumber, sigma_far: float = SIGMA_FAR,
                tail_len: int = TAIL_LEN) -> bool:
    """True when |x - y| decays slower than every gauge power.

    Detected as a tail slope <= sigma_far, which admits 'large' infinitesimals
    such as -1/log(rho_eps).  Pre-asymptotic bias matters here: on shallow
    grids a slowly-decaying net can still show a slope above the threshold, so
    callers probing logarithmic-scale nets should use a deep grid.
    """
    _check_same_grid(x, y)
    d = gen_sub(x, y)
    sl = x.gauge.tail(tail_len)
    a = np.abs(d.values[sl])
    if np.any(a == 0.0):
        return False
    slope, _, _ = _tail_regression(d, tail_len)
    return slope <= sigma_far


def inf_sup(x: GenNumber, y: GenNumber) -> tuple[GenNumber, GenNumber]:
    """Componentwise lattice infimum and supremum of two nets."""
    _check_same_grid(x, y)
    return (GenNumber(np.minimum(x.values, y.values), x.gauge),
            GenNumber(np.maximum(x.values, y.values), x.gauge))
