"""Higher-order variational operators along time paths: action, first and
second variation, Euler-Lagrange residuals, momentum-cascade operators,
energy-rate (du Bois-Reymond) residual, D'Alembert residual with generalized
forces, and Noether constants.

A path supplies q and its time derivatives up to twice the Lagrangian order
(state plus right-hand side for integrated trajectories).  Time derivatives
of composed quantities are taken by 5-point central differences along the
path with spacing h = 1e-3*(t2-t1) scaled by the derivative order; residual
assertions near mollified layers must therefore exclude a stencil-width
margin around them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, ValidationError
from .gsfield import integrate_1d
from .gauge import GenNumber

_EPS_MACH = float(np.finfo(float).eps)

_D1_W = (1.0, -8.0, 0.0, 8.0, -1.0)     # /12h
_D2_W = (-1.0, 16.0, -30.0, 16.0, -1.0)  # /12h^2
_D3_W = (-1.0, 2.0, 0.0, -2.0, 1.0)      # /2h^3
_D4_W = (1.0, -4.0, 6.0, -4.0, 1.0)      # /h^4

# Spacing of the nested central-difference stencils relative to the span.
FD_BASE_FRACTION = 1e-3


def _fd(fn: Callable[[float], float], t: float, order: int, h: float) -> float:
    vals = [fn(t + k * h) for k in (-2, -1, 0, 1, 2)]
    if order == 1:
        w, denom = _D1_W, 12.0 * h
    elif order == 2:
        w, denom = _D2_W, 12.0 * h * h
    elif order == 3:
        w, denom = _D3_W, 2.0 * h ** 3
    elif order == 4:
        w, denom = _D4_W, h ** 4
    else:
        raise CapabilityError("time derivatives supported up to order 4")
    return sum(wi * vi for wi, vi in zip(w, vals)) / denom


@dataclass(frozen=True)
class LagrangianSpec:
    """An order-m Lagrangian L(t, q, q', ..., q^(m)) with partial access.

    Slot convention: partial_t is the derivative in the explicit time slot;
    partial_q[i] differentiates in the q^(i) slot, i = 0..m.  When partials
    are omitted they fall back to central differences of L; cross_check
    compares supplied partials against that fallback on random probes.
    """

    order: int
    L: Callable[[float, float, tuple], float]  # (eps, t, qs)
    partial_t: Callable | None = None
    partial_q: tuple | None = None
    autonomous: bool = False

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError("Lagrangian order must be >= 1")
        if self.partial_q is not None and len(self.partial_q) != self.order + 1:
            raise ValidationError("need one q-slot partial per order 0..m")

    def d_t(self, eps: float, t: float, qs: tuple) -> float:
        if self.autonomous:
            return 0.0
        if self.partial_t is not None:
            return float(self.partial_t(eps, t, qs))
        h = _EPS_MACH ** (1.0 / 3.0) * max(1.0, abs(t))
        return (self.L(eps, t + h, qs) - self.L(eps, t - h, qs)) / (2.0 * h)

    def d_q(self, i: int, eps: float, t: float, qs: tuple) -> float:
        if self.partial_q is not None:
            return float(self.partial_q[i](eps, t, qs))
        h = _EPS_MACH ** (1.0 / 3.0) * max(1.0, abs(qs[i]))
        up = list(qs)
        dn = list(qs)
        up[i] += h
        dn[i] -= h
        return (self.L(eps, t, tuple(up)) - self.L(eps, t, tuple(dn))) / (2.0 * h)

    def cross_check(self, eps: float, probes: Sequence[tuple], rtol: float = 1e-5):
        """Validate supplied partials against central differences of L."""
        if self.partial_q is None and self.partial_t is None:
            return
        ref = LagrangianSpec(order=self.order, L=self.L,
                             autonomous=self.autonomous)
        for t, qs in probes:
            for i in range(self.order + 1):
                if self.partial_q is None:
                    break
                a = self.d_q(i, eps, t, qs)
                b = ref.d_q(i, eps, t, qs)
                if abs(a - b) > rtol * max(1.0, abs(a), abs(b)):
                    raise ValidationError(
                        f"partial in slot {i} disagrees with finite differences "
                        f"at t={t:.4g}: {a!r} vs {b!r}")
            if self.partial_t is not None and not self.autonomous:
                a = self.d_t(eps, t, qs)
                b = ref.d_t(eps, t, qs)
                if abs(a - b) > rtol * max(1.0, abs(a), abs(b)):
                    raise ValidationError(
                        f"time partial disagrees with finite differences "
                        f"at t={t:.4g}: {a!r} vs {b!r}")


@dataclass(frozen=True)
class FunctionPath:
    """A path given by analytic callables for q and its derivatives."""

    t1: float
    t2: float
    fns: tuple                  # q, q', q'', ... as many as callers will ask for

    def derivs(self, t: float, upto: int) -> tuple:
        if upto >= len(self.fns):
            raise CapabilityError(
                f"path carries {len(self.fns) - 1} derivatives, asked {upto}")
        return tuple(float(f(t)) for f in self.fns[: upto + 1])

    def crossing_times(self):
        return []


class _ShiftedPath:
    """q + s*h for central differencing of the action in a direction."""

    def __init__(self, base, direction, s):
        self.base = base
        self.direction = direction
        self.s = s
        self.t1 = base.t1
        self.t2 = base.t2

    def derivs(self, t, upto):
        qs = self.base.derivs(t, upto)
        return tuple(q + self.s * self.direction.deriv(t, i)
                     for i, q in enumerate(qs))

    def crossing_times(self):
        return self.base.crossing_times()


@dataclass(frozen=True)
class Direction:
    """A variation direction h with analytic derivatives."""

    fns: tuple

    def deriv(self, t: float, i: int) -> float:
        if i >= len(self.fns):
            raise CapabilityError(f"direction carries {len(self.fns) - 1} derivatives")
        return float(self.fns[i](t))


def probe_direction(k: int, t1: float, t2: float, m: int) -> Direction:
    """Boundary-flat probe direction sin(k pi s) * (s(1-s))^m, s scaled time.

    The polynomial factor has a zero of order m at both ends, so all
    derivatives up to order m vanish there.
    """
    T = t2 - t1
    poly = np.polynomial.Polynomial([0.0, 1.0]) * np.polynomial.Polynomial([1.0, -1.0])
    poly = poly ** m
    polys = [poly]
    for _ in range(m):
        polys.append(polys[-1].deriv())
    w = k * math.pi

    def make(order):
        def h_fn(t):
            s = (t - t1) / T
            total = 0.0
            for i in range(order + 1):
                trig = math.sin(w * s + (order - i) * 0.5 * math.pi)
                total += math.comb(order, i) * polys[i](s) * w ** (order - i) * trig
            return total / T ** order
        return h_fn

    return Direction(fns=tuple(make(i) for i in range(m + 1)))


def _path_points(path):
    try:
        return list(path.crossing_times())
    except AttributeError:
        return []


def action(lag: LagrangianSpec, path, eps: float, tol: float = 1e-10) -> float:
    """J[q] = integral of L along the path, splitting at layer crossings."""

    def integrand(_eps, t):
        return lag.L(eps, t, path.derivs(t, lag.order))

    return integrate_1d(integrand, eps, path.t1, path.t2, tol=tol,
                        singular_points=_path_points(path))


def check_boundary_flat(h: Direction, t1: float, t2: float, m: int,
                        tol: float = 1e-10):
    for i in range(m):
        for t in (t1, t2):
            if abs(h.deriv(t, i)) > tol:
                raise ValidationError(
                    f"direction derivative {i} does not vanish at t={t:.4g}")


def first_variation(lag: LagrangianSpec, path, h: Direction, eps: float,
                    tol: float = 1e-10) -> float:
    """Integral form sum_i int d_(i+2)L . h^(i) dt over admissible h."""
    check_boundary_flat(h, path.t1, path.t2, lag.order)

    def integrand(_eps, t):
        qs = path.derivs(t, lag.order)
        return sum(lag.d_q(i, eps, t, qs) * h.deriv(t, i)
                   for i in range(lag.order + 1))

    return integrate_1d(integrand, eps, path.t1, path.t2, tol=tol,
                        singular_points=_path_points(path))


def first_variation_central(lag: LagrangianSpec, path, h: Direction, eps: float,
                            s: float = 1e-5, tol: float = 1e-10) -> float:
    """Central-difference surrogate (J(q+sh) - J(q-sh)) / 2s."""
    jp = action(lag, _ShiftedPath(path, h, +s), eps, tol=tol)
    jm = action(lag, _ShiftedPath(path, h, -s), eps, tol=tol)
    return (jp - jm) / (2.0 * s)


def second_variation(lag: LagrangianSpec, path, h: Direction, eps: float,
                     s: float = 1e-4, tol: float = 1e-12) -> float:
    """Central second difference (J(q+sh) - 2J(q) + J(q-sh)) / s^2."""
    check_boundary_flat(h, path.t1, path.t2, lag.order)
    jp = action(lag, _ShiftedPath(path, h, +s), eps, tol=tol)
    j0 = action(lag, path, eps, tol=tol)
    jm = action(lag, _ShiftedPath(path, h, -s), eps, tol=tol)
    return (jp - 2.0 * j0 + jm) / (s * s)


def _fd_base(path) -> float:
    return FD_BASE_FRACTION * (path.t2 - path.t1)


def _require_interior(path, t: float, margin: float):
    if not (path.t1 + margin <= t <= path.t2 - margin):
        raise CapabilityError(
            f"t={t:.6g} too close to the path boundary for the stencil")


def _partial_along(lag, path, eps, slot):
    def fn(tau):
        qs = path.derivs(tau, lag.order)
        return lag.d_q(slot, eps, tau, qs)
    return fn


def el_terms(lag: LagrangianSpec, path, eps: float, t: float) -> list[float]:
    """The m+1 signed terms of the stationarity residual along the path.

    Signs follow the classical orientation (the highest-derivative term
    carries coefficient +1), so for first-order Lagrangians this is
    d/dt dL/dq' - dL/dq and a generalized damping force enters the
    D'Alembert identity with its physical sign.
    """
    m = lag.order
    h0 = _fd_base(path)
    _require_interior(path, t, 2 * h0 * m)
    terms = []
    for i in range(m + 1):
        fn = _partial_along(lag, path, eps, i)
        if i == 0:
            val = fn(t)
        else:
            val = _fd(fn, t, i, h0 * i)
        terms.append((-1.0) ** (i + m) * val)
    return terms


def el_residual(lag: LagrangianSpec, path, eps: float, t: float) -> float:
    """Stationarity residual; zero along extremals of the action."""
    return float(sum(el_terms(lag, path, eps, t)))


def phi_zero(lag: LagrangianSpec, path, eps: float, t: float) -> float:
    """The j = 0 member of the momentum cascade (the stationarity sum in its
    cascade orientation); vanishes along extremals."""
    return (-1.0) ** lag.order * el_residual(lag, path, eps, t)


def phi_recurrence_residual(lag: LagrangianSpec, path, eps: float, t: float,
                            j: int) -> float:
    """Residual of d/dt phi^j = d_(j+1)L - phi^(j-1) for j = 1..m."""
    if not (1 <= j <= lag.order):
        raise ValidationError("recurrence index j must be in 1..m")
    h0 = _fd_base(path)
    _require_interior(path, t, 2 * h0 * (lag.order + 1))

    def phij(tau):
        return phi_operators(lag, path, eps, tau)[j - 1]

    lhs = _fd(phij, t, 1, h0)
    qs = path.derivs(t, lag.order)
    prev = (phi_zero(lag, path, eps, t) if j == 1
            else phi_operators(lag, path, eps, t)[j - 2])
    return lhs - (lag.d_q(j - 1, eps, t, qs) - prev)


def dalembert_residual(lag: LagrangianSpec, Q, path, eps: float,
                       t: float) -> float:
    """Stationarity residual against a generalized force Q(eps, t, qs);
    reduces to el_residual exactly at Q = 0."""
    qs = path.derivs(t, lag.order)
    return el_residual(lag, path, eps, t) - float(Q(eps, t, qs))


def phi_operators(lag: LagrangianSpec, path, eps: float, t: float) -> list[float]:
    """Momentum cascade phi^j, j = 1..m:
    phi^j = sum_{i=0}^{m-j} (-1)^i d^i/dt^i d_(i+j+2)L."""
    m = lag.order
    h0 = _fd_base(path)
    _require_interior(path, t, 2 * h0 * max(1, m))
    out = []
    for j in range(1, m + 1):
        total = 0.0
        for i in range(0, m - j + 1):
            fn = _partial_along(lag, path, eps, i + j)
            val = fn(t) if i == 0 else _fd(fn, t, i, h0 * i)
            total += (-1.0) ** i * val
        out.append(total)
    return out


def _dbr_scalar(lag, path, eps):
    def g(tau):
        qs = path.derivs(tau, lag.order)
        phis = phi_operators(lag, path, eps, tau)
        return (lag.L(eps, tau, qs)
                - sum(p * qs[j + 1] for j, p in enumerate(phis)))
    return g


def dbr_residual(lag: LagrangianSpec, path, eps: float, t: float) -> float:
    """Energy-rate identity residual d/dt(L - sum phi^j q^(j)) - d_1 L."""
    h0 = _fd_base(path)
    m = lag.order
    _require_interior(path, t, 2 * h0 * (m + 1) + 2 * h0)
    g = _dbr_scalar(lag, path, eps)
    qs = path.derivs(t, lag.order)
    return _fd(g, t, 1, h0) - lag.d_t(eps, t, qs)


@dataclass(frozen=True)
class Symmetry:
    """One-parameter family data at s = 0: time generator dtau/ds(0, t) and
    space generator dsigma/ds(0, q)."""

    tau_s: Callable[[float], float]
    sigma_s: Callable[[float], float]

    @classmethod
    def time_translation(cls):
        return cls(tau_s=lambda t: 1.0, sigma_s=lambda q: 0.0)

    @classmethod
    def space_translation(cls):
        return cls(tau_s=lambda t: 0.0, sigma_s=lambda q: 1.0)


def noether_constant(lag: LagrangianSpec, path, sym: Symmetry, eps: float,
                     t: float) -> float:
    """Conserved combination sum phi^i eta^(i-1) + (L - sum phi^i q^(i)) tau_s.

    The eta cascade starts from the space generator along the path and
    subtracts q^(i) times the time-generator rate.
    """
    m = lag.order
    h0 = _fd_base(path)
    _require_interior(path, t, 2 * h0 * (m + 1))

    def tau_dot(tau):
        return _fd(sym.tau_s, tau, 1, h0)

    def eta(i):
        if i == 0:
            return lambda tau: sym.sigma_s(path.derivs(tau, 0)[0])
        prev = eta(i - 1)

        def fn(tau):
            qi = path.derivs(tau, i)[i]
            return _fd(prev, tau, 1, h0) - qi * tau_dot(tau)
        return fn

    qs = path.derivs(t, m)
    phis = phi_operators(lag, path, eps, t)
    total = sum(phis[i - 1] * eta(i - 1)(t) for i in range(1, m + 1))
    lag_val = lag.L(eps, t, qs)
    total += (lag_val - sum(phis[j] * qs[j + 1] for j in range(m))) * sym.tau_s(t)
    return total


@dataclass(frozen=True)
class VariationReport:
    value: GenNumber
    direction: str
    quadrature_tol: float


def variation_report(lag: LagrangianSpec, paths_by_eps: dict, h: Direction,
                     gauge, tol: float = 1e-10,
                     label: str = "") -> VariationReport:
    """First variation per grid epsilon, packed as a net."""
    vals = np.array([first_variation(lag, paths_by_eps[e], h, e, tol=tol)
                     for e in gauge.eps_grid])
    return VariationReport(value=GenNumber(vals, gauge), direction=label,
                           quadrature_tol=tol)
