"""Explicit embedded Runge-Kutta pair (order 5 with order-4 error estimate
and order-4 dense output), PI step control, a state-dependent step cap for
steep mollified layers, and event localization by bisection on the dense
interpolant.

Deterministic by construction: no randomness, no wall-clock, pure float ops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DivergenceError, StiffnessError

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
# Dense-output weights for the quartic continuous extension.
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0


@dataclass
class DenseSolution:
    """Piecewise-quartic interpolant of an adaptive integration run."""

    t0: float
    tf: float
    dim: int
    seg_t0: np.ndarray = field(repr=False, default=None)
    seg_t1: np.ndarray = field(repr=False, default=None)
    seg_h: np.ndarray = field(repr=False, default=None)
    rcont: np.ndarray = field(repr=False, default=None)  # (nseg, 5, dim)
    step_times: np.ndarray = field(repr=False, default=None)
    step_states: np.ndarray = field(repr=False, default=None)
    events: list = field(default_factory=list)  # (event_index, t, y)
    nfev: int = 0

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        if not (self.t0 - 1e-12 <= t <= self.tf + 1e-12):
            raise ValueError(f"t={t} outside integration span [{self.t0}, {self.tf}]")
        i = int(np.searchsorted(self.seg_t1, t, side="left"))
        if i >= len(self.seg_t1):
            i = len(self.seg_t1) - 1
        th = (t - self.seg_t0[i]) / self.seg_h[i]
        r = self.rcont[i]
        return r[0] + th * (r[1] + (1 - th) * (r[2] + th * (r[3] + (1 - th) * r[4])))

    def eval_many(self, ts) -> np.ndarray:
        return np.array([self(t) for t in np.asarray(ts, dtype=float)])


def _initial_step(f, t0, y0, f0, tol, t_cap):
    scale = tol + tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_cap)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    dm = max(d1, d2)
    h1 = (0.01 / dm) ** 0.2 if dm > 1e-15 else max(1e-6, h0 * 1e3)
    return min(100 * h0, h1, t_cap)


def integrate_adaptive(f: Callable[[float, np.ndarray], np.ndarray],
                       t0: float, tf: float, y0: Sequence[float],
                       tol: float = 1e-10,
                       max_step_fn: Callable[[float, np.ndarray], float] | None = None,
                       events: Sequence[Callable[[float, np.ndarray], float]] = (),
                       max_steps: int = 2_000_000,
                       blowup: float = 1e10) -> DenseSolution:
    """Integrate y' = f(t, y) from t0 to tf (tf > t0) with dense output.

    max_step_fn(t, y) caps the next step (used to resolve mollified layers);
    events are scalar functions whose sign changes are located by bisection
    on the dense interpolant to 1e-12 and force step alignment there.
    """
    if tf <= t0:
        raise ValueError("integrate_adaptive requires tf > t0")
    y = np.array(y0, dtype=float)
    dim = len(y)
    t = float(t0)
    fk = np.asarray(f(t, y), dtype=float)
    nfev = 1
    h = _initial_step(f, t, y, fk, tol, tf - t0)
    nfev += 1

    seg_t0, seg_t1, seg_h, rconts = [], [], [], []
    step_times = [t]
    step_states = [y.copy()]
    ev_records = []
    ev_vals = [float(g(t, y)) for g in events]
    ev_last_fire = [-math.inf] * len(events)
    err_prev = 1.0
    ks = np.empty((7, dim))

    for _ in range(max_steps):
        if t >= tf - 1e-14 * max(1.0, abs(tf)):
            break
        cap = tf - t
        if max_step_fn is not None:
            cap = min(cap, float(max_step_fn(t, y)))
        h = min(h, cap)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StiffnessError(f"step size underflow at t={t:.6g}", t=t)

        # one attempted step
        ks[0] = fk
        for i in range(1, 7):
            yi = y + h * (ks[:i].T @ _A[i])
            ks[i] = f(t + _C[i] * h, yi)
        nfev += 6
        y_new = y + h * (ks.T @ _B5)
        err_vec = h * (ks.T @ (_B5 - _B4))
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if not np.all(np.isfinite(y_new)):
            raise DivergenceError(f"state became non-finite near t={t:.6g}", t=t)

        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** (-0.2))
            continue

        # accepted: build dense coefficients
        ydiff = y_new - y
        bspl = h * ks[0] - ydiff
        r = np.empty((5, dim))
        r[0] = y
        r[1] = ydiff
        r[2] = bspl
        r[3] = ydiff - h * ks[6] - bspl
        r[4] = h * (ks.T @ _D)
        t_new = t + h

        # event localization on this step
        cut = None
        if events:
            def dense(th):
                return (r[0] + th * (r[1] + (1 - th) *
                        (r[2] + th * (r[3] + (1 - th) * r[4]))))
            for idx, g in enumerate(events):
                g1 = float(g(t_new, y_new))
                g0 = ev_vals[idx]
                if g0 == 0.0 or g0 * g1 > 0.0:
                    ev_vals[idx] = g1
                    continue
                lo, hi = 0.0, 1.0
                glo = g0
                while (hi - lo) * h > 1e-12:
                    mid = 0.5 * (lo + hi)
                    gm = float(g(t + mid * h, dense(mid)))
                    if glo * gm <= 0.0:
                        hi = mid
                    else:
                        lo, glo = mid, gm
                th_ev = 0.5 * (lo + hi)
                # a cut can leave the state a hair before the zero; ignore the
                # immediate re-detection of the same event
                if t + th_ev * h - ev_last_fire[idx] < 1e-9 * max(1.0, abs(t)):
                    ev_vals[idx] = g1
                    continue
                if cut is None or th_ev < cut[0]:
                    cut = (th_ev, idx)
            if cut is not None:
                th_ev, idx = cut
                t_ev = t + th_ev * h
                y_ev = dense(th_ev)
                ev_records.append((idx, t_ev, y_ev.copy()))
                ev_last_fire[idx] = t_ev
                # truncate the accepted step at the event
                t_new, y_new = t_ev, y_ev
                ev_vals = [float(g(t_new, y_new)) for g in events]

        if np.max(np.abs(y_new)) > blowup:
            raise DivergenceError(f"state blow-up at t={t_new:.6g}", t=t_new)

        seg_t0.append(t)
        seg_t1.append(t_new)
        seg_h.append(h)
        rconts.append(r)
        step_times.append(t_new)
        step_states.append(y_new.copy())

        # PI controller
        if err < 1e-12:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        err_prev = max(err, 1e-12)
        t, y = t_new, y_new
        if cut is not None:
            fk = np.asarray(f(t, y), dtype=float)
            nfev += 1
        else:
            fk = ks[6].copy()  # FSAL
        h = h * factor
    else:
        raise StiffnessError(f"step budget exhausted at t={t:.6g}", t=t)

    sol = DenseSolution(
        t0=float(t0), tf=float(t), dim=dim,
        seg_t0=np.array(seg_t0), seg_t1=np.array(seg_t1), seg_h=np.array(seg_h),
        rcont=np.array(rconts), step_times=np.array(step_times),
        step_states=np.array(step_states), events=ev_records, nfev=nfev)
    return sol
