"""Per-epsilon integration of three singular mechanical systems whose
coefficients carry mollified jumps: a pendulum whose length switches at a
wrap angle, a pendulum damped by two media, and a fourth-order bi-harmonic
oscillator with switched frequencies.

Each right-hand side is the literal equation of motion with the Heaviside /
Dirac coefficients replaced by their kernel-smoothed profiles of width
2/b_eps; the integrator clamps its step inside those layers and records the
layer entry/exit times as events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CapabilityError,
    DegenerateSystemError,
    InvalidStateError,
    ValidationError,
)
from .gauge import Gauge
from .mollifier import MollifierSpec
from .rk import DenseSolution, integrate_adaptive

# Monitor channels are sampled at this fraction of the time span.
MONITOR_STRIDE = 1e-3
# The steep region around a layer is this many half-widths 1/b wide.
LAYER_GUARD = 4.0
# Step cap inside the guarded region, in units of 1/b.
LAYER_STEP_CAP = 0.2


class SystemName(str, Enum):
    PENDULUM = "pendulum"
    DAMPED_TWO_MEDIA = "damped_two_media"
    PAIS_UHLENBECK = "pais_uhlenbeck"


_REQUIRED_PARAMS = {
    SystemName.PENDULUM: ("L1", "L2", "g", "theta0", "m"),
    SystemName.DAMPED_TWO_MEDIA: ("Lambda", "g", "theta0", "beta1", "beta2", "m"),
    SystemName.PAIS_UHLENBECK: ("m", "ts", "w1", "w1hat", "w2", "w2hat"),
}

_POSITIVE_PARAMS = {
    SystemName.PENDULUM: ("L1", "L2", "g", "m"),
    SystemName.DAMPED_TWO_MEDIA: ("Lambda", "g", "m"),
    SystemName.PAIS_UHLENBECK: ("m", "w1", "w1hat", "w2", "w2hat"),
}


@dataclass(frozen=True)
class SystemSpec:
    name: SystemName
    params: dict
    mollifier: MollifierSpec
    gauge: Gauge

    def __post_init__(self):
        missing = [k for k in _REQUIRED_PARAMS[self.name] if k not in self.params]
        if missing:
            raise ValidationError(f"{self.name.value} missing params {missing}")
        bad = [k for k in _POSITIVE_PARAMS[self.name] if self.params[k] <= 0.0]
        if bad:
            raise ValidationError(f"{self.name.value} params must be > 0: {bad}")

    @property
    def order(self) -> int:
        return 4 if self.name is SystemName.PAIS_UHLENBECK else 2

    @property
    def layers(self) -> tuple[float, ...]:
        """Singular locations: angles for the pendula, the switch time for
        the fourth-order oscillator."""
        p = self.params
        if self.name is SystemName.PENDULUM:
            return (p["theta0"],)
        if self.name is SystemName.DAMPED_TWO_MEDIA:
            return (-p["theta0"], p["theta0"])
        return (p["ts"],)

    def b(self, eps: float) -> float:
        return self.mollifier.b(self.gauge, eps)


def pendulum_rhs(spec: SystemSpec, eps: float, t: float, theta: float,
                 theta_dot: float) -> float:
    """Angular acceleration of the wrap-length pendulum.

    Uses the rearranged form with no division by theta_dot, so turning
    points are regular.
    """
    p = spec.params
    b = spec.b(eps)
    m = spec.mollifier
    u = b * (p["theta0"] - theta)
    lam = m.primitive_scalar(u) * p["L1"] + p["L2"]
    lam_p = -b * m.psi_scalar(u) * p["L1"]
    if lam <= 0.0:
        raise InvalidStateError(
            f"pendulum length {lam:.3e} <= 0 at theta={theta:.6g}; "
            "mollifier scale is incompatible with the geometry")
    g = p["g"]
    num = (-theta_dot * theta_dot * lam * lam_p
           + g * lam_p * (math.cos(theta) - math.cos(p["theta0"]))
           - g * lam * math.sin(theta))
    return num / (lam * lam)


def damped_rhs(spec: SystemSpec, eps: float, t: float, theta: float,
               theta_dot: float) -> float:
    """Two-media damped pendulum: medium switches at theta = +-theta0."""
    p = spec.params
    b = spec.b(eps)
    m = spec.mollifier
    h_in = m.primitive_scalar(b * (theta + p["theta0"]))
    h_out = m.primitive_scalar(b * (theta - p["theta0"]))
    beta = p["beta1"] + (h_in - h_out) * (p["beta2"] - p["beta1"])
    return -2.0 * beta * theta_dot - p["g"] * math.sin(theta) / p["Lambda"]


def pu_frequencies(spec: SystemSpec, eps: float, t: float):
    """(w1, w2, w1dot, w2dot) at time t for the switched bi-harmonic system.

    The smoothed-step argument is ts - t, so before the switch the hatted
    values apply and after it the primed values do.
    """
    p = spec.params
    b = spec.b(eps)
    m = spec.mollifier
    u = b * (p["ts"] - t)
    h = m.primitive_scalar(u)
    d = b * m.psi_scalar(u)
    w1 = p["w1"] + h * (p["w1hat"] - p["w1"])
    w2 = p["w2"] + h * (p["w2hat"] - p["w2"])
    w1dot = -d * (p["w1hat"] - p["w1"])
    w2dot = -d * (p["w2hat"] - p["w2"])
    return w1, w2, w1dot, w2dot


def pu_rhs(spec: SystemSpec, eps: float, t: float, q: float, qd: float,
           qdd: float, qddd: float) -> float:
    """Fourth derivative of the switched-frequency bi-harmonic oscillator."""
    w1, w2, w1dot, w2dot = pu_frequencies(spec, eps, t)
    return (-(w1 * w1 + w2 * w2) * qdd
            - 2.0 * (w1 * w1dot + w2 * w2dot) * qd
            - w1 * w1 * w2 * w2 * q)


def energy(spec: SystemSpec, eps: float, state: Sequence[float],
           t: float = 0.0) -> float:
    """Conserved monitor: mechanical energy for the pendulum, the bi-harmonic
    invariant for the switched oscillator.  The damped system dissipates and
    has no energy monitor."""
    p = spec.params
    if spec.name is SystemName.PENDULUM:
        theta, theta_dot = state
        b = spec.b(eps)
        h = spec.mollifier.primitive_scalar(b * (p["theta0"] - theta))
        lam = h * p["L1"] + p["L2"]
        return (0.5 * p["m"] * theta_dot ** 2 * lam ** 2
                - p["m"] * p["g"] * lam * math.cos(theta)
                - p["m"] * p["g"] * (1.0 - h) * p["L1"] * math.cos(p["theta0"]))
    if spec.name is SystemName.PAIS_UHLENBECK:
        q, qd, qdd, qddd = state
        w1, w2, _, _ = pu_frequencies(spec, eps, t)
        return 0.5 * p["m"] * (2.0 * qd * qddd - qdd ** 2
                               + (w1 * w1 + w2 * w2) * qd ** 2
                               + w1 * w1 * w2 * w2 * q ** 2)
    raise CapabilityError("the damped system is dissipative; no energy monitor")


@dataclass
class Trajectory:
    """Dense per-epsilon solution with monitor channels.

    times/states/rhs_values sample the dense output on a fixed stride;
    the solution object answers arbitrary-time queries.
    """

    spec: SystemSpec
    eps: float
    t1: float
    t2: float
    times: np.ndarray
    states: np.ndarray        # (n, order)
    rhs_values: np.ndarray    # (n,) highest derivative from the RHS
    monitors: dict
    events: list              # (event_index, t, state) from layer edges
    solution: DenseSolution = field(repr=False, default=None)
    rhs: Callable = field(repr=False, default=None)

    def state(self, t: float) -> np.ndarray:
        return self.solution(t)

    def rhs_at(self, t: float) -> float:
        return float(self.rhs(t, self.solution(t))[-1])

    def derivs(self, t: float, upto: int) -> tuple[float, ...]:
        """q and its time derivatives up to the requested order.

        Orders below the ODE order come from the dense state; the ODE order
        itself from the right-hand side.  Anything higher is not available
        from a single trajectory.
        """
        order = self.spec.order
        if upto > order:
            raise CapabilityError(
                f"trajectory carries derivatives up to order {order}, "
                f"requested {upto}")
        y = self.solution(t)
        out = list(y[: upto + 1]) if upto < order else list(y)
        if upto == order:
            out.append(float(self.rhs(t, y)[-1]))
        return tuple(out)

    def crossing_times(self) -> list[float]:
        """Layer-edge event times, with immediate re-fires of the same edge
        (grazing contacts) merged."""
        ts = sorted(t for _, t, _ in self.events)
        merged = []
        for t in ts:
            if not merged or t - merged[-1] > 1e-9 * max(1.0, abs(t)):
                merged.append(t)
        return merged

    def far_segments(self, guard: float = LAYER_GUARD) -> list[tuple[float, float]]:
        """Maximal time windows where the state is far from every layer.

        Far means outside guard/b of the singular location (in angle for the
        pendula, in time for the switched oscillator).
        """
        b = self.spec.b(self.eps)
        width = guard / b
        if self.spec.name is SystemName.PAIS_UHLENBECK:
            def far(t, y):
                return abs(t - self.spec.params["ts"]) > width
        else:
            def far(t, y):
                return all(abs(y[0] - c) > width for c in self.spec.layers)
        segs = []
        start = None
        for t, y in zip(self.times, self.states):
            if far(t, y):
                if start is None:
                    start = t
                end = t
            else:
                if start is not None and end > start:
                    segs.append((start, end))
                start = None
        if start is not None and end > start:
            segs.append((start, end))
        return segs


def _layer_events_and_cap(spec: SystemSpec, eps: float):
    b = spec.b(eps)
    guard = LAYER_GUARD / b
    cap = LAYER_STEP_CAP / b
    layers = spec.layers
    if spec.name is SystemName.PAIS_UHLENBECK:
        def max_step(t, y):
            return cap if abs(t - layers[0]) < guard else math.inf
        events = [lambda t, y, c=c, s=s: (t - c) + s / b
                  for c in layers for s in (-1.0, 1.0)]
    else:
        def max_step(t, y):
            return cap if any(abs(y[0] - c) < guard for c in layers) else math.inf
        events = [lambda t, y, c=c, s=s: (y[0] - c) + s / b
                  for c in layers for s in (-1.0, 1.0)]
    return events, max_step


def make_rhs(spec: SystemSpec, eps: float) -> Callable:
    if spec.name is SystemName.PENDULUM:
        def rhs(t, y):
            return np.array([y[1], pendulum_rhs(spec, eps, t, y[0], y[1])])
    elif spec.name is SystemName.DAMPED_TWO_MEDIA:
        def rhs(t, y):
            return np.array([y[1], damped_rhs(spec, eps, t, y[0], y[1])])
    else:
        def rhs(t, y):
            return np.array([y[1], y[2], y[3],
                             pu_rhs(spec, eps, t, y[0], y[1], y[2], y[3])])
    return rhs


def integrate(spec: SystemSpec, eps: float, ic: Sequence[float],
              t_span: tuple[float, float], tol: float = 1e-10) -> Trajectory:
    """Integrate one epsilon slice of a system and fill its monitors."""
    if len(ic) != spec.order:
        raise ValidationError(
            f"initial condition must have length {spec.order}")
    if tol <= 0.0:
        raise ValidationError("tolerance must be positive")
    t1, t2 = float(t_span[0]), float(t_span[1])
    rhs = make_rhs(spec, eps)
    events, max_step = _layer_events_and_cap(spec, eps)
    sol = integrate_adaptive(rhs, t1, t2, ic, tol=tol,
                             max_step_fn=max_step, events=events)
    times = np.arange(t1, t2 + 0.5 * MONITOR_STRIDE * (t2 - t1),
                      MONITOR_STRIDE * (t2 - t1))
    times[-1] = min(times[-1], sol.tf)
    states = sol.eval_many(times)
    rhs_values = np.array([rhs(t, y)[-1] for t, y in zip(times, states)])
    monitors = {}
    if spec.name is not SystemName.DAMPED_TWO_MEDIA:
        monitors["energy"] = np.array(
            [energy(spec, eps, y, t) for t, y in zip(times, states)])
    return Trajectory(spec=spec, eps=eps, t1=t1, t2=t2, times=times,
                      states=states, rhs_values=rhs_values, monitors=monitors,
                      events=sol.events, solution=sol, rhs=rhs)


@dataclass(frozen=True)
class PUAnalytic:
    """Two-mode closed form q(t) = A1 sin(w1 t + p1) + A2 sin(w2 t + p2)."""

    w1: float
    w2: float
    A1: float
    phi1: float
    A2: float
    phi2: float

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        out = 0.0
        for A, w, ph in ((self.A1, self.w1, self.phi1),
                         (self.A2, self.w2, self.phi2)):
            arg = w * t + ph + order * 0.5 * math.pi
            out = out + A * w ** order * np.sin(arg)
        return float(out) if np.ndim(t) == 0 else out


def pu_analytic(w1: float, w2: float, ic: Sequence[float],
                t0: float = 0.0) -> PUAnalytic:
    """Fit amplitudes/phases of the constant-frequency bi-harmonic solution
    to the state (q, q', q'', q''') at t0.

    Returns A_i >= 0 and phases in (-pi, pi]; the sign ambiguity
    (A, phi) ~ (-A, phi - pi) is resolved by the nonnegative amplitude.
    """
    if w1 <= 0.0 or w2 <= 0.0:
        raise ValidationError("frequencies must be positive")
    if abs(w1 - w2) < 1e-12 * max(w1, w2):
        raise DegenerateSystemError("equal frequencies: two-mode fit is singular")
    # unknowns: (s1, c1, s2, c2) with q_i = s_i cos(w_i (t-t0)) + c_i sin(...)
    M = np.array([
        [1.0, 0.0, 1.0, 0.0],
        [0.0, w1, 0.0, w2],
        [-w1 ** 2, 0.0, -w2 ** 2, 0.0],
        [0.0, -w1 ** 3, 0.0, -w2 ** 3],
    ])
    s1, c1, s2, c2 = np.linalg.solve(M, np.asarray(ic, dtype=float))
    A1 = math.hypot(s1, c1)
    A2 = math.hypot(s2, c2)
    phi1 = math.atan2(s1, c1) - w1 * t0
    phi2 = math.atan2(s2, c2) - w2 * t0
    # fold phases into (-pi, pi]
    phi1 = math.remainder(phi1, 2.0 * math.pi)
    phi2 = math.remainder(phi2, 2.0 * math.pi)
    if phi1 <= -math.pi:
        phi1 += 2.0 * math.pi
    if phi2 <= -math.pi:
        phi2 += 2.0 * math.pi
    return PUAnalytic(w1=w1, w2=w2, A1=A1, phi1=phi1, A2=A2, phi2=phi2)


def small_oscillation_reference(spec: SystemSpec, side: str, anchor):
    """Linearized constant-length pendulum matched to trajectory data.

    side='below': anchor (t1, theta1) at rest, frequency sqrt(g/(L1+L2));
    side='above': anchor (t3, theta3, theta_dot3), frequency sqrt(g/L2).
    Returns a callable theta(t) (with optional derivative order).
    """
    if spec.name is not SystemName.PENDULUM:
        raise CapabilityError("small-oscillation reference is pendulum-only")
    p = spec.params
    if side == "below":
        t1, th1 = anchor
        w = math.sqrt(p["g"] / (p["L1"] + p["L2"]))

        def ref(t, order: int = 0):
            t = np.asarray(t, dtype=float)
            val = th1 * w ** order * np.cos(w * (t - t1) + order * 0.5 * math.pi)
            return float(val) if np.ndim(t) == 0 else val
        return ref
    if side == "above":
        t3, th3, thd3 = anchor
        w = math.sqrt(p["g"] / p["L2"])

        def ref(t, order: int = 0):
            t = np.asarray(t, dtype=float)
            # cos/sin in the reversed time variable (t3 - t)
            s = w * (t3 - t)
            if order == 0:
                val = th3 * np.cos(s) - (thd3 / w) * np.sin(s)
            elif order == 1:
                val = w * th3 * np.sin(s) + thd3 * np.cos(s)
            else:
                raise CapabilityError("reference supplies orders 0 and 1")
            return float(val) if np.ndim(t) == 0 else val
        return ref
    raise ValidationError("side must be 'below' or 'above'")


def join_references(ref_below, ref_above, t_cross: float, m: MollifierSpec,
                    gauge: Gauge, eps: float):
    """Blend the two linearized solutions through the smoothed step.

    Orientation: the below-side solution before the crossing time, the
    above-side one after it.
    """
    from .mollifier import heaviside_at

    def joined(t):
        h = heaviside_at(m, gauge, eps, t - t_cross)
        return ref_below(t) + h * (ref_above(t) - ref_below(t))
    return joined


def constant_length_pendulum_rhs(L: float, g: float):
    """Reference dynamics far from the wrap angle (fixed length L)."""
    def rhs(t, y):
        return np.array([y[1], -g * math.sin(y[0]) / L])
    return rhs
