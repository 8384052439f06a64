"""Weak-stationarity optimal control machinery: Hamiltonian, forward state
and backward adjoint solves, linearized-state sensitivity, the two routes to
the cost first variation, a steepest-descent forward-backward sweep, and
empirical stability-order diagnostics.

State and control are scalar; controls live on a fixed uniform node grid and
are interpolated by a cubic spline for the integrators.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    ConsistencyError,
    StepSizeError,
    ValidationError,
)
from .rk import DenseSolution, integrate_adaptive

_EPS_MACH = float(np.finfo(float).eps)

DEFAULT_NODES = 2001
ODE_TOL = 1e-10


@dataclass(frozen=True)
class ControlProblem:
    """Scalar running-cost control problem on a fixed horizon.

    L(t, q, u) is the running cost, phi(t, q, u) the state dynamics; the
    partials are required (the solver differentiates the Hamiltonian).
    Optional time-partials default to autonomous data.  control_box is a
    validation bound only; the solver itself is unconstrained.
    """

    L: Callable[[float, float, float], float]
    dL_dq: Callable[[float, float, float], float]
    dL_du: Callable[[float, float, float], float]
    phi: Callable[[float, float, float], float]
    dphi_dq: Callable[[float, float, float], float]
    dphi_du: Callable[[float, float, float], float]
    q1: float
    t_span: tuple[float, float]
    dL_dt: Callable[[float, float, float], float] | None = None
    dphi_dt: Callable[[float, float, float], float] | None = None
    control_box: tuple[float, float] | None = None

    def __post_init__(self):
        if self.t_span[1] <= self.t_span[0]:
            raise ValidationError("t_span must be increasing")

    def cross_check(self, probes: Sequence[tuple], rtol: float = 1e-5):
        """Compare supplied partials with central differences on probe points."""
        h = _EPS_MACH ** (1.0 / 3.0)
        for t, q, u in probes:
            checks = [
                (self.dL_dq(t, q, u),
                 (self.L(t, q + h, u) - self.L(t, q - h, u)) / (2 * h), "dL/dq"),
                (self.dL_du(t, q, u),
                 (self.L(t, q, u + h) - self.L(t, q, u - h)) / (2 * h), "dL/du"),
                (self.dphi_dq(t, q, u),
                 (self.phi(t, q + h, u) - self.phi(t, q - h, u)) / (2 * h), "dphi/dq"),
                (self.dphi_du(t, q, u),
                 (self.phi(t, q, u + h) - self.phi(t, q, u - h)) / (2 * h), "dphi/du"),
            ]
            for got, want, name in checks:
                if abs(got - want) > rtol * max(1.0, abs(got), abs(want)):
                    raise ValidationError(
                        f"{name} disagrees with finite differences at "
                        f"(t,q,u)=({t:.3g},{q:.3g},{u:.3g})")

    def lipschitz_estimate(self, u, n: int = 64) -> float:
        """Sampled bound on |dphi/dq| along the horizon; warns when the
        horizon-Lipschitz product reaches 1 (contraction heuristics degrade)."""
        t1, t2 = self.t_span
        ts = np.linspace(t1, t2, n)
        qs = np.linspace(self.q1 - 2.0, self.q1 + 2.0, 9)
        L_u = max(abs(self.dphi_dq(t, q, u(t))) for t in ts for q in qs)
        if (t2 - t1) * L_u >= 1.0:
            warnings.warn(
                f"horizon times Lipschitz bound = {(t2 - t1) * L_u:.2f} >= 1; "
                "sweep contraction is not guaranteed", stacklevel=2)
        return L_u


class ControlGrid:
    """Control values on uniform nodes with a cubic interpolant."""

    def __init__(self, ts: np.ndarray, values: np.ndarray):
        if len(ts) != len(values):
            raise ValidationError("node and value lengths differ")
        self.ts = np.asarray(ts, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._spline = CubicSpline(self.ts, self.values)

    @classmethod
    def constant(cls, t_span, value: float, nodes: int = DEFAULT_NODES):
        ts = np.linspace(t_span[0], t_span[1], nodes)
        return cls(ts, np.full(nodes, float(value)))

    @classmethod
    def from_function(cls, t_span, fn, nodes: int = DEFAULT_NODES):
        ts = np.linspace(t_span[0], t_span[1], nodes)
        return cls(ts, np.array([fn(t) for t in ts]))

    def __call__(self, t):
        return float(self._spline(t))

    def with_values(self, values) -> "ControlGrid":
        return ControlGrid(self.ts, values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def hamiltonian(P: ControlProblem, t: float, q: float, u: float,
                p: float) -> float:
    """H = L + p * phi."""
    return P.L(t, q, u) + p * P.phi(t, q, u)


def hamiltonian_du(P: ControlProblem, t: float, q: float, u: float,
                   p: float) -> float:
    return P.dL_du(t, q, u) + p * P.dphi_du(t, q, u)


def hamiltonian_dt(P: ControlProblem, t: float, q: float, u: float,
                   p: float) -> float:
    lt = P.dL_dt(t, q, u) if P.dL_dt is not None else 0.0
    ft = P.dphi_dt(t, q, u) if P.dphi_dt is not None else 0.0
    return lt + p * ft


def forward_state(P: ControlProblem, u) -> DenseSolution:
    """Solve q' = phi(t, q, u(t)), q(t1) = q1; the trailing component of the
    returned solution accumulates the running cost."""
    t1, t2 = P.t_span

    def rhs(t, y):
        return np.array([P.phi(t, y[0], u(t)), P.L(t, y[0], u(t))])

    return integrate_adaptive(rhs, t1, t2, [P.q1, 0.0], tol=ODE_TOL)


def cost(P: ControlProblem, u, forward: DenseSolution | None = None) -> float:
    sol = forward if forward is not None else forward_state(P, u)
    return float(sol(sol.tf)[1])


def adjoint_state(P: ControlProblem, u, forward: DenseSolution):
    """Backward solve p' = -dH/dq with p(t2) = 0.

    Returns (callable p(t), accumulated integral of dH/du * ubar placeholder
    omitted); integration runs in the reversed time variable s = t1+t2-t.
    """
    t1, t2 = P.t_span

    def rhs(s, y):
        t = t1 + t2 - s
        q = forward(t)[0]
        return np.array([P.dL_dq(t, q, u(t)) + P.dphi_dq(t, q, u(t)) * y[0]])

    sol = integrate_adaptive(rhs, t1, t2, [0.0], tol=ODE_TOL)

    def p(t):
        return float(sol(t1 + t2 - t)[0])

    return p


def linearized_state(P: ControlProblem, u, forward: DenseSolution, ubar,
                     with_variation: bool = False):
    """Solve the sensitivity ODE qbar' = dphi/dq qbar + dphi/du ubar,
    qbar(t1) = 0; optionally accumulate int (dL/dq qbar + dL/du ubar)."""
    t1, t2 = P.t_span

    def rhs(t, y):
        q = forward(t)[0]
        qb = y[0]
        d = (P.dphi_dq(t, q, u(t)) * qb + P.dphi_du(t, q, u(t)) * ubar(t))
        if with_variation:
            acc = P.dL_dq(t, q, u(t)) * qb + P.dL_du(t, q, u(t)) * ubar(t)
            return np.array([d, acc])
        return np.array([d])

    y0 = [0.0, 0.0] if with_variation else [0.0]
    return integrate_adaptive(rhs, t1, t2, y0, tol=ODE_TOL)


def control_first_variation(P: ControlProblem, u, ubar,
                            rtol_contract: float = 1e-4,
                            atol_contract: float = 1e-10) -> tuple[float, float]:
    """Cost first variation in direction ubar, two independent routes.

    Route 1 integrates dL/dq * qbar + dL/du * ubar with the linearized state;
    route 2 integrates dH/du * ubar along the adjoint.  The duality between
    the sensitivity and adjoint solves makes the two integrals equal for any
    supplied coefficient functions, so disagreement beyond rtol_contract
    relative (plus the atol_contract integration-noise floor) signals broken
    numerics and raises ConsistencyError.  Semantically wrong partials are
    the business of cross_check and of finite differences of the cost.
    """
    fwd = forward_state(P, u)
    lin = linearized_state(P, u, fwd, ubar, with_variation=True)
    via_linearized = float(lin(lin.tf)[1])

    p = adjoint_state(P, u, fwd)
    t1, t2 = P.t_span

    def rhs(t, y):
        q = fwd(t)[0]
        return np.array([hamiltonian_du(P, t, q, u(t), p(t)) * ubar(t)])

    acc = integrate_adaptive(rhs, t1, t2, [0.0], tol=ODE_TOL)
    via_hamiltonian = float(acc(acc.tf)[0])

    threshold = (rtol_contract * max(abs(via_linearized), abs(via_hamiltonian))
                 + atol_contract)
    if abs(via_linearized - via_hamiltonian) > threshold:
        raise ConsistencyError(
            f"first-variation routes disagree: {via_linearized!r} vs "
            f"{via_hamiltonian!r}")
    return via_linearized, via_hamiltonian


@dataclass
class SweepState:
    """Converged (or stopped) forward-backward sweep."""

    u: ControlGrid
    q: DenseSolution = field(repr=False)
    p_values: np.ndarray = field(repr=False)
    grad: np.ndarray = field(repr=False)
    grad_norm: float = 0.0
    iterations: int = 0
    cost: float = 0.0
    converged: bool = False

    def p(self, t):
        return float(CubicSpline(self.u.ts, self.p_values)(t))


def solve_wps(P: ControlProblem, u0: ControlGrid | None = None,
              step: float = 0.5, max_iter: int = 200,
              grad_tol: float = 1e-8, nodes: int = DEFAULT_NODES,
              backtracking: bool = True) -> SweepState:
    """Steepest-descent sweep on the stationarity system.

    Iterates forward state, backward adjoint, and u <- u - step * dH/du on
    the control nodes until the sup norm of dH/du meets grad_tol.  With
    backtracking the step halves whenever the cost fails to decrease; ten
    consecutive non-decreasing iterations raise StepSizeError.
    """
    if step <= 0.0:
        raise ValidationError("descent step must be positive")
    u = u0 if u0 is not None else ControlGrid.constant(P.t_span, 0.0, nodes)
    P.lipschitz_estimate(u)
    alpha = step
    prev_cost = math.inf
    bad_streak = 0
    fwd = forward_state(P, u)
    for it in range(max_iter + 1):
        p_fn = adjoint_state(P, u, fwd)
        p_nodes = np.array([p_fn(t) for t in u.ts])
        q_nodes = np.array([fwd(t)[0] for t in u.ts])
        grad = np.array([hamiltonian_du(P, t, q, uv, p)
                         for t, q, uv, p in zip(u.ts, q_nodes, u.values, p_nodes)])
        gnorm = float(np.max(np.abs(grad)))
        c = float(fwd(fwd.tf)[1])
        if gnorm <= grad_tol or it == max_iter:
            return SweepState(u=u, q=fwd, p_values=p_nodes, grad=grad,
                              grad_norm=gnorm, iterations=it, cost=c,
                              converged=gnorm <= grad_tol)
        if c > prev_cost + 1e-12 * max(1.0, abs(prev_cost)):
            bad_streak += 1
            if backtracking:
                alpha = 0.5 * alpha
            if bad_streak >= 10:
                raise StepSizeError(
                    f"cost increased for {bad_streak} consecutive iterations; "
                    f"try a smaller step than {step!r}")
        else:
            bad_streak = 0
        prev_cost = c
        u = u.with_values(u.values - alpha * grad)
        fwd = forward_state(P, u)
    raise AssertionError("unreachable")


def hamiltonian_time_identity(P: ControlProblem, sweep: SweepState,
                              n_samples: int = 201) -> np.ndarray:
    """Residual |d/dt H - dH/dt| along the converged sweep.

    The total derivative uses 5-point central differences of
    H(t, q(t), u(t), p(t)); the partial comes from the declared
    time-partials (zero for autonomous data).
    """
    t1, t2 = P.t_span
    h = 1e-3 * (t2 - t1)
    ts = np.linspace(t1 + 3 * h, t2 - 3 * h, n_samples)

    def H_of_t(t):
        q = sweep.q(t)[0]
        return hamiltonian(P, t, q, sweep.u(t), sweep.p(t))

    w = (1.0, -8.0, 0.0, 8.0, -1.0)
    out = np.empty((n_samples, 2))
    for i, t in enumerate(ts):
        dH = sum(wi * H_of_t(t + k * h)
                 for wi, k in zip(w, (-2, -1, 0, 1, 2))) / (12.0 * h)
        q = sweep.q(t)[0]
        pd = hamiltonian_dt(P, t, q, sweep.u(t), sweep.p(t))
        out[i] = (t, abs(dH - pd))
    return out


def order1_stability(P: ControlProblem, u, ubar,
                     hs: Sequence[float]) -> list[float]:
    """Ratios ||q^{u+h ubar} - q^u||_0 / |h|; bounded for stable data."""
    base = forward_state(P, u)
    ts = np.linspace(P.t_span[0], P.t_span[1], 401)
    base_vals = np.array([base(t)[0] for t in ts])
    out = []
    for h in hs:
        pert = forward_state(P, lambda t: u(t) + h * ubar(t))
        diff = np.max(np.abs([pert(t)[0] for t in ts] - base_vals))
        out.append(diff / abs(h))
    return out


def order2_stability_slope(P: ControlProblem, u, ubar,
                           hs: Sequence[float]) -> float:
    """Log-log slope of ||q^{u+h ubar} - q^u - h qbar||_0 against h."""
    base = forward_state(P, u)
    lin = linearized_state(P, u, base, ubar)
    ts = np.linspace(P.t_span[0], P.t_span[1], 401)
    base_vals = np.array([base(t)[0] for t in ts])
    lin_vals = np.array([lin(t)[0] for t in ts])
    errs = []
    for h in hs:
        pert = forward_state(P, lambda t: u(t) + h * ubar(t))
        diff = np.max(np.abs(
            [pert(t)[0] for t in ts] - base_vals - h * lin_vals))
        errs.append(diff)
    return float(np.polyfit(np.log(np.abs(hs)), np.log(errs), 1)[0])
