"""Evaluation, differentiation, 1-D integration and graded norms for nets of
smooth functions of one variable.

A field is a callable (eps, x) -> value together with a declared derivative
budget.  Derivatives come either from user-supplied partials or from central
finite-difference stencils; integrals from adaptive Gauss-Kronrod quadrature
with caller-declared forced split points for steep mollified layers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import AccuracyError, CapabilityError, ValidationError
from .gauge import Gauge, GenNumber

_EPS_MACH = float(np.finfo(float).eps)

# Central difference coefficients, 4th-order accurate, on stencil -2h..2h.
_D1_W = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_W = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# 2nd-order accurate stencils for orders 3 and 4 on the same 5 points.
_D3_W = np.array([-1.0, 2.0, 0.0, -2.0, 1.0]) / 2.0
_D4_W = np.array([1.0, -4.0, 6.0, -4.0, 1.0])


class DerivativeMode(str, Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite_difference"


@dataclass(frozen=True)
class GsfField:
    """A net of smooth 1-D functions with a declared derivative budget.

    evaluator(eps, x) must be total on the domain of interest for every grid
    eps.  In analytic mode, partials(eps, x, order) supplies derivatives; in
    finite-difference mode they come from central stencils.  Declared layer
    points mark where the function varies on scale 1/b and finite differences
    degrade; queries there are flagged with a warning.
    """

    evaluator: Callable[[float, float], float]
    max_derivative_order: int = 4
    derivative_mode: DerivativeMode = DerivativeMode.FINITE_DIFFERENCE
    partials: Callable[[float, float, int], float] | None = None
    layer_points: tuple[float, ...] = ()
    layer_halfwidth: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.derivative_mode is DerivativeMode.ANALYTIC and self.partials is None:
            raise ValidationError("analytic mode requires a partials callable")

    def __call__(self, eps: float, x: float) -> float:
        return float(self.evaluator(eps, x))

    def in_layer(self, eps: float, x: float) -> bool:
        if not self.layer_points or self.layer_halfwidth is None:
            return False
        w = self.layer_halfwidth(eps)
        return any(abs(x - c) < w for c in self.layer_points)


def field_from_function(fn, max_order: int = 6, partials=None, layers=(),
                        layer_halfwidth=None) -> GsfField:
    mode = DerivativeMode.ANALYTIC if partials else DerivativeMode.FINITE_DIFFERENCE
    return GsfField(evaluator=fn, max_derivative_order=max_order,
                    derivative_mode=mode, partials=partials,
                    layer_points=tuple(layers), layer_halfwidth=layer_halfwidth)


def gsf_derivative(f: GsfField, eps: float, x: float, order: int = 1,
                   direction: float = 1.0) -> float:
    """Directional derivative of the defining net at one point.

    Finite-difference mode uses a 5-point central stencil with step
    h = eps_machine^(1/(order+2)) * scale(x); accuracy inside a declared
    layer is degraded and flagged via a warning.
    """
    if order == 0:
        return f(eps, x)
    if order > f.max_derivative_order:
        raise CapabilityError(
            f"derivative order {order} exceeds declared budget "
            f"{f.max_derivative_order}")
    if f.derivative_mode is DerivativeMode.ANALYTIC:
        return float(f.partials(eps, x, order)) * direction ** order
    if f.in_layer(eps, x):
        warnings.warn("finite-difference derivative queried inside a declared "
                      "steep layer; accuracy is degraded", stacklevel=2)
    scale = max(1.0, abs(x))
    h = _EPS_MACH ** (1.0 / (order + 2)) * scale
    stencil = {1: _D1_W, 2: _D2_W, 3: _D3_W, 4: _D4_W}
    if order not in stencil:
        raise CapabilityError("finite differences implemented up to order 4")
    w = stencil[order]
    vals = np.array([f(eps, x + k * h * direction) for k in range(-2, 3)])
    return float(np.dot(w, vals) / h ** order)


def integrate_1d(f: GsfField | Callable, eps: float, a: float, b: float,
                 tol: float = 1e-10, singular_points: Sequence[float] = (),
                 limit: int = 2000) -> float:
    """Adaptive quadrature of the eps-slice of f over [a, b].

    Declared singular points force initial panel splits so the adaptive rule
    cannot step over a width-1/b spike.  Raises AccuracyError when the
    estimated error exceeds the requested tolerance.
    """
    if a > b:
        raise ValidationError("integration bounds must satisfy a <= b")
    if a == b:
        return 0.0
    fn = (lambda x: f(eps, x)) if isinstance(f, GsfField) else (lambda x: f(eps, x))
    # bracket each declared point with geometrically shrinking panels so the
    # adaptive rule cannot step over a spike much narrower than the interval
    pts = set()
    span = b - a
    for p in singular_points:
        for w in [0.0] + [span * 10.0 ** -k for k in range(2, 9)]:
            for q in (p - w, p + w) if w else (p,):
                if a < q < b:
                    pts.add(q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        val, err = quad(fn, a, b, epsabs=tol, epsrel=0.0,
                        points=sorted(pts) or None, limit=limit)
    if err > max(10.0 * tol, 1e-13 * max(1.0, abs(val))):
        raise AccuracyError(
            f"quadrature error estimate {err:.2e} exceeds tolerance {tol:.2e}",
            achieved=err)
    return float(val)


@dataclass(frozen=True)
class GradedNorm:
    order: int
    value: GenNumber


def graded_norm(f: GsfField, l: int, K, gauge: Gauge,
                samples: int = 2048) -> GradedNorm:
    """Max of |derivatives up to order l| over the per-eps interval K.

    K is either a fixed (lo, hi) pair or a callable eps -> (lo, hi).  Dense
    sampling plus golden-section refinement around the arg-max; the result is
    a lower bound of the true norm within sampling resolution.
    """
    if l > f.max_derivative_order:
        raise CapabilityError("norm order exceeds the declared derivative budget")
    phi = (math.sqrt(5.0) - 1.0) / 2.0

    def slice_norm(eps: float) -> float:
        lo, hi = K(eps) if callable(K) else K
        xs = np.linspace(lo, hi, samples)
        best = 0.0
        for order in range(l + 1):
            vals = np.array([abs(gsf_derivative(f, eps, x, order)) if order
                             else abs(f(eps, x)) for x in xs])
            i = int(np.argmax(vals))
            best = max(best, float(vals[i]))
            # local golden-section refinement around the sampled arg-max
            a = xs[max(i - 1, 0)]
            b = xs[min(i + 1, samples - 1)]
            g = (lambda x, o=order: abs(gsf_derivative(f, eps, x, o)) if o
                 else abs(f(eps, x)))
            c, d = b - phi * (b - a), a + phi * (b - a)
            for _ in range(40):
                if g(c) > g(d):
                    b, d = d, c
                    c = b - phi * (b - a)
                else:
                    a, c = c, d
                    d = a + phi * (b - a)
            best = max(best, g(0.5 * (a + b)))
        return best

    vals = np.array([slice_norm(e) for e in gauge.eps_grid])
    return GradedNorm(order=l, value=GenNumber(vals, gauge))


@dataclass(frozen=True)
class TaylorReport:
    residual: float            # |f(a+k) - Taylor_n(a; k)|
    remainder_estimate: float  # quadrature of the integral remainder
    ratio: float               # residual / remainder_estimate (1.0 when exact)


def taylor_check(f: GsfField, eps: float, a: float, k: float, n: int,
                 tol: float = 1e-12) -> TaylorReport:
    """Compare f(a+k) against its degree-n jet plus the integral remainder."""
    if n + 1 > f.max_derivative_order:
        raise CapabilityError("Taylor check needs derivatives up to n+1")
    jet = f(eps, a)
    fact = 1.0
    for j in range(1, n + 1):
        fact *= j
        jet += gsf_derivative(f, eps, a, j) * k ** j / fact
    residual = abs(f(eps, a + k) - jet)

    fact_n = math.factorial(n)

    def integrand(_eps, t):
        return ((1.0 - t) ** n *
                gsf_derivative(f, eps, a + t * k, n + 1) * k ** (n + 1) / fact_n)

    remainder = abs(integrate_1d(integrand, eps, 0.0, 1.0, tol=tol))
    ratio = residual / remainder if remainder > 0.0 else math.inf if residual else 1.0
    return TaylorReport(residual=residual, remainder_estimate=remainder, ratio=ratio)
