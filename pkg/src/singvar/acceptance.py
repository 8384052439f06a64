"""Acceptance battery: ten criteria, each returning measured values and the
pinned tolerances it was judged against.

The numbers here are the exit bar for the library: kernel moments, embedding
identities, calculus identities on seeded random polynomials, the three
singular systems (energy bookkeeping, corner growth, envelope and jump,
switched-frequency closed forms), variational identities along integrated
trajectories, the control sweep benchmarks, and byte-level determinism.
"""

from __future__ import annotations

import hashlib
import json
import math
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .errors import SingvarError
from .gauge import Gauge, gauge_from_range
from .gsfield import field_from_function, gsf_derivative, integrate_1d, taylor_check
from .mollifier import MollifierSpec, build_mollifier, delta_at, heaviside_at
from .dynamics import (
    SystemName,
    SystemSpec,
    Trajectory,
    constant_length_pendulum_rhs,
    damped_rhs,
    integrate,
    pu_analytic,
    small_oscillation_reference,
)
from .optctrl import (
    ControlProblem,
    control_first_variation,
    cost,
    hamiltonian,
    hamiltonian_time_identity,
    order1_stability,
    order2_stability_slope,
    solve_wps,
)
from .rk import integrate_adaptive
from .variational import (
    LagrangianSpec,
    Symmetry,
    dalembert_residual,
    dbr_residual,
    el_terms,
    noether_constant,
    phi_recurrence_residual,
)


@dataclass
class CriterionResult:
    cid: int
    title: str
    passed: bool
    measured: dict
    tolerances: dict
    notes: str = ""

    def as_json(self) -> dict:
        def clean(d):
            out = {}
            for k, v in d.items():
                if isinstance(v, (bool, np.bool_)):
                    out[k] = bool(v)
                elif isinstance(v, (int, np.integer)):
                    out[k] = int(v)
                elif isinstance(v, (float, np.floating)):
                    out[k] = float(v)
                else:
                    out[k] = v
            return out

        return {"id": self.cid, "title": self.title, "passed": bool(self.passed),
                "measured": clean(self.measured),
                "tolerances": clean(self.tolerances), "notes": self.notes}


# ---------------------------------------------------------------------------
# shared builders

def paper_pendulum(mol: MollifierSpec, gauge: Gauge) -> SystemSpec:
    return SystemSpec(SystemName.PENDULUM,
                      dict(L1=0.4, L2=0.2, g=9.8, theta0=math.pi / 40, m=1.0),
                      mol, gauge)


def paper_damped(mol: MollifierSpec, gauge: Gauge) -> SystemSpec:
    return SystemSpec(SystemName.DAMPED_TWO_MEDIA,
                      dict(Lambda=0.6, g=9.8, theta0=math.pi / 40,
                           beta1=0.0064, beta2=0.3859, m=1.0),
                      mol, gauge)


def paper_pu(mol: MollifierSpec, gauge: Gauge) -> SystemSpec:
    return SystemSpec(SystemName.PAIS_UHLENBECK,
                      dict(m=1.0, ts=15.0, w1=0.5, w1hat=0.7, w2=1.0,
                           w2hat=1.2),
                      mol, gauge)


def lagrangian_for(spec: SystemSpec, eps: float) -> LagrangianSpec:
    """Analytic-partial Lagrangian of a built-in system at one grid eps."""
    p = spec.params
    mol = spec.mollifier
    gauge = spec.gauge
    b = spec.b(eps)
    if spec.name is SystemName.PENDULUM:
        m, g, L1, L2, th0 = p["m"], p["g"], p["L1"], p["L2"], p["theta0"]

        def lam(theta):
            return mol.primitive_scalar(b * (th0 - theta)) * L1 + L2

        def lam_p(theta):
            return -b * mol.psi_scalar(b * (th0 - theta)) * L1

        def L(e, t, qs):
            th, thd = qs
            lv = lam(th)
            h = (lv - L2) / L1
            return (0.5 * m * thd * thd * lv * lv + m * g * lv * math.cos(th)
                    + m * g * (1.0 - h) * L1 * math.cos(th0))

        def d2(e, t, qs):
            th, thd = qs
            lv, lp = lam(th), lam_p(th)
            return (m * thd * thd * lv * lp
                    + m * g * lp * (math.cos(th) - math.cos(th0))
                    - m * g * lv * math.sin(th))

        def d3(e, t, qs):
            th, thd = qs
            lv = lam(th)
            return m * thd * lv * lv

        return LagrangianSpec(order=1, L=L, partial_q=(d2, d3), autonomous=True)

    if spec.name is SystemName.DAMPED_TWO_MEDIA:
        m, g, lam = p["m"], p["g"], p["Lambda"]

        def L(e, t, qs):
            th, thd = qs
            return 0.5 * m * thd * thd * lam * lam + m * g * lam * math.cos(th)

        def d2(e, t, qs):
            return -m * g * lam * math.sin(qs[0])

        def d3(e, t, qs):
            return m * qs[1] * lam * lam

        return LagrangianSpec(order=1, L=L, partial_q=(d2, d3), autonomous=True)

    from .dynamics import pu_frequencies
    m = p["m"]

    def freqs(t):
        return pu_frequencies(spec, eps, t)

    def L(e, t, qs):
        q, qd, qdd = qs
        w1, w2, _, _ = freqs(t)
        return 0.5 * m * (qdd * qdd - (w1 * w1 + w2 * w2) * qd * qd
                          + w1 * w1 * w2 * w2 * q * q)

    def d1(e, t, qs):
        q, qd, qdd = qs
        w1, w2, w1d, w2d = freqs(t)
        dS = 2.0 * (w1 * w1d + w2 * w2d)
        dP = 2.0 * (w1 * w1d * w2 * w2 + w2 * w2d * w1 * w1)
        return 0.5 * m * (-dS * qd * qd + dP * q * q)

    def d2(e, t, qs):
        w1, w2, _, _ = freqs(t)
        return m * w1 * w1 * w2 * w2 * qs[0]

    def d3(e, t, qs):
        w1, w2, _, _ = freqs(t)
        return -m * (w1 * w1 + w2 * w2) * qs[1]

    def d4(e, t, qs):
        return m * qs[2]

    return LagrangianSpec(order=2, L=L, partial_t=d1, partial_q=(d2, d3, d4))


def damped_force(spec: SystemSpec, eps: float):
    """Generalized damping force -2 m beta(theta) Lambda^2 theta_dot."""
    p = spec.params
    b = spec.b(eps)
    mol = spec.mollifier

    def Q(e, t, qs):
        th, thd = qs
        h_in = mol.primitive_scalar(b * (th + p["theta0"]))
        h_out = mol.primitive_scalar(b * (th - p["theta0"]))
        beta = p["beta1"] + (h_in - h_out) * (p["beta2"] - p["beta1"])
        return -2.0 * p["m"] * beta * p["Lambda"] ** 2 * thd

    return Q


def sample_times_away_from_layers(traj: Trajectory, n: int = 40,
                                  margin_frac: float = 0.02) -> list[float]:
    """Interior sample times inside far-from-layer segments, padded so the
    widest nested finite-difference stencil stays inside the segment."""
    span = traj.t2 - traj.t1
    pad = margin_frac * span
    ts = []
    for a, b in traj.far_segments():
        a2, b2 = max(a, traj.t1 + pad) + pad, min(b, traj.t2 - pad) - pad
        if b2 <= a2:
            continue
        k = max(2, int(round(n * (b2 - a2) / span)))
        ts.extend(np.linspace(a2, b2, k))
    return sorted(ts)


def _drift(values: np.ndarray) -> float:
    ref = max(abs(float(np.mean(values))), 1e-30)
    return float((np.max(values) - np.min(values)) / ref)


# ---------------------------------------------------------------------------
# criteria

def criterion_1_mollifier(moment_order: int = 4) -> CriterionResult:
    """The bar is the order-4 requirement: moments 1..4 vanish.  The kernel
    is built at the configured order, so a misconfigured bundle shows up here
    as a measured non-vanishing moment."""
    mol = build_mollifier(moment_order)
    psi = lambda x: float(mol.psi(np.atleast_1d(x))[0])
    mass = quad(psi, -1, 1, epsabs=1e-14, limit=300)[0]
    moments = {}
    for k in range(1, 5):
        moments[k] = quad(lambda x, kk=k: x ** kk * psi(x), -1, 1,
                          epsabs=1e-14, limit=300)[0]
    xs = np.linspace(1.0, 3.0, 101)
    outside = max(abs(psi(x)) for x in xs) + max(abs(psi(-x)) for x in xs)
    xe = np.linspace(0.0, 1.0, 401)
    asym = max(abs(psi(x) - psi(-x)) for x in xe)
    measured = {
        "mass_error": abs(mass - 1.0),
        "max_abs_moment_1_to_j": max(abs(v) for v in moments.values()),
        "outside_support": outside,
        "max_asymmetry": asym,
    }
    tol = {"mass_error": 1e-10, "max_abs_moment_1_to_j": 1e-8,
           "outside_support": 0.0, "max_asymmetry": 1e-12}
    passed = (measured["mass_error"] <= tol["mass_error"]
              and measured["max_abs_moment_1_to_j"] <= tol["max_abs_moment_1_to_j"]
              and measured["outside_support"] <= tol["outside_support"]
              and measured["max_asymmetry"] <= tol["max_asymmetry"])
    return CriterionResult(1, f"kernel moments (j={moment_order})", passed,
                           measured, tol)


def criterion_2_embedding(moment_order: int = 4) -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(moment_order)
    eps0 = gauge.eps_grid[0]
    h0_err = abs(heaviside_at(mol, gauge, eps0, 0.0) - 0.5)

    eps_small = gauge.eps_grid[-1]
    b_small = mol.b(gauge, eps_small)
    clamp_exact = 0.0
    for x in (1.01 / b_small, 0.5, 2.0):
        clamp_exact = max(clamp_exact,
                          abs(heaviside_at(mol, gauge, eps_small, x) - 1.0),
                          abs(heaviside_at(mol, gauge, eps_small, -x) - 0.0))

    val = quad(lambda x: delta_at(mol, gauge, eps_small, x) * math.cos(x),
               -1.0 / b_small, 1.0 / b_small, epsabs=1e-12, limit=400)[0]
    pairing_err = abs(val - 1.0)

    eps_mid = gauge.eps_grid[6]
    b_mid = mol.b(gauge, eps_mid)
    hfield = field_from_function(
        lambda e, x: heaviside_at(mol, gauge, e, x), max_order=2)
    xs = np.linspace(-1.8 / b_mid, 1.8 / b_mid, 20)
    dmax = max(abs(gsf_derivative(hfield, eps_mid, float(x), 1)
                   - delta_at(mol, gauge, eps_mid, float(x))) for x in xs)

    measured = {"heaviside_at_zero_error": h0_err,
                "clamp_error_outside_layer": clamp_exact,
                "delta_pairing_cos_error": pairing_err,
                "d_heaviside_vs_delta_max": dmax}
    tol = {"heaviside_at_zero_error": 1e-8,
           "clamp_error_outside_layer": 0.0,
           "delta_pairing_cos_error": 1e-6,
           "d_heaviside_vs_delta_max": 1e-6}
    passed = all(measured[k] <= tol[k] for k in tol)
    return CriterionResult(2, "jump/point-mass embedding identities", passed,
                           measured, tol)


def _random_poly(rng, deg: int) -> np.polynomial.Polynomial:
    return np.polynomial.Polynomial(rng.uniform(-1.0, 1.0, deg + 1))


def criterion_3_gsf_properties(seed: int = 20260808,
                               instances: int = 100) -> CriterionResult:
    rng = np.random.default_rng(seed)
    eps = 0.0625
    worst = {"integration_by_parts": 0.0, "change_of_variables": 0.0,
             "product_rule": 0.0, "chain_rule": 0.0,
             "taylor_halving_ratio_dev": 0.0, "monotonicity": 0.0}
    for _ in range(instances):
        f = _random_poly(rng, 5)
        g = _random_poly(rng, 5)
        a = float(rng.uniform(-2.0, 0.0))
        b = float(a + rng.uniform(0.5, 2.0))

        fdx, gdx = f.deriv(), g.deriv()
        lhs = integrate_1d(lambda e, x: fdx(x) * g(x), eps, a, b, tol=1e-12)
        boundary = f(b) * g(b) - f(a) * g(a)
        rhs = boundary - integrate_1d(lambda e, x: f(x) * gdx(x), eps, a, b,
                                      tol=1e-12)
        scale = 1.0 + abs(lhs) + abs(boundary)
        worst["integration_by_parts"] = max(worst["integration_by_parts"],
                                            abs(lhs - rhs) / scale)

        s0 = float(rng.uniform(0.4, 1.0))
        s1 = float(s0 + rng.uniform(0.3, 1.0))
        direct = integrate_1d(lambda e, x: f(x), eps, s0 * s0, s1 * s1,
                              tol=1e-12)
        pulled = integrate_1d(lambda e, s: f(s * s) * 2.0 * s, eps, s0, s1,
                              tol=1e-12)
        scale = 1.0 + abs(direct)
        worst["change_of_variables"] = max(worst["change_of_variables"],
                                           abs(direct - pulled) / scale)

        x0 = float(rng.uniform(a, b))
        prod = field_from_function(lambda e, x: f(x) * g(x))
        got = gsf_derivative(prod, eps, x0, 1)
        want = fdx(x0) * g(x0) + f(x0) * gdx(x0)
        scale = 1.0 + abs(want)
        worst["product_rule"] = max(worst["product_rule"],
                                    abs(got - want) / scale)

        comp = field_from_function(lambda e, x: f(g(x)))
        got = gsf_derivative(comp, eps, x0, 1)
        want = fdx(g(x0)) * gdx(x0)
        scale = 1.0 + abs(want)
        worst["chain_rule"] = max(worst["chain_rule"], abs(got - want) / scale)

        ftay = _random_poly(rng, 6)
        a0 = float(rng.uniform(-1.0, 1.0))
        k = 0.1
        # the halving law reads the k^4 remainder term; make it dominate the
        # k^5/k^6 corrections by a factor 5 so the ratio stays near 1/16
        d4v = ftay.deriv(4)(a0)
        need = abs(ftay.deriv(5)(a0)) * k + abs(ftay.deriv(6)(a0)) * k * k / 6.0
        if abs(d4v) < need + 0.3:
            coeffs = ftay.coef.copy()
            coeffs[4] += math.copysign((need + 0.3 - abs(d4v)) / 24.0 + 0.05,
                                       d4v if d4v != 0.0 else 1.0)
            ftay = np.polynomial.Polynomial(coeffs)
        tfield = field_from_function(lambda e, x: ftay(x), max_order=6,
                                     partials=lambda e, x, o: ftay.deriv(o)(x))
        r_full = taylor_check(tfield, eps, a0, k, 3).residual
        r_half = taylor_check(tfield, eps, a0, 0.5 * k, 3).residual
        ratio = r_half / r_full if r_full > 0 else 0.0625
        worst["taylor_halving_ratio_dev"] = max(
            worst["taylor_halving_ratio_dev"], abs(ratio / 0.0625 - 1.0))

        bump_poly = _random_poly(rng, 2)
        low = integrate_1d(lambda e, x: f(x), eps, a, b, tol=1e-12)
        high = integrate_1d(lambda e, x: f(x) + bump_poly(x) ** 2, eps, a, b,
                            tol=1e-12)
        worst["monotonicity"] = max(worst["monotonicity"], low - high)

    tol = {"integration_by_parts": 1e-9, "change_of_variables": 1e-9,
           "product_rule": 1e-7, "chain_rule": 1e-7,
           "taylor_halving_ratio_dev": 0.65, "monotonicity": 1e-10}
    passed = all(worst[k] <= tol[k] for k in tol)
    return CriterionResult(3, f"field calculus identities ({instances} seeded "
                           "polynomial instances)", passed, worst, tol)


def criterion_4_pendulum(tol_ode: float = 1e-10) -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(4)
    spec = paper_pendulum(mol, gauge)
    eps = gauge.eps_grid[-1]
    traj = integrate(spec, eps, (0.0, 1.0), (0.0, 10.0), tol=tol_ode)
    E = traj.monitors["energy"]

    seg_drift = 0.0
    segs = traj.far_segments()
    seg_means = []
    for a, b in segs:
        mask = (traj.times >= a) & (traj.times <= b)
        if np.count_nonzero(mask) < 3:
            continue
        seg_drift = max(seg_drift, _drift(E[mask]))
        seg_means.append(float(np.mean(E[mask])))
    cross_drift = 0.0
    for e0, e1 in zip(seg_means[:-1], seg_means[1:]):
        cross_drift = max(cross_drift, abs(e1 - e0) / abs(e0))

    t_entry = traj.crossing_times()[0]
    ref = integrate_adaptive(
        constant_length_pendulum_rhs(spec.params["L1"] + spec.params["L2"],
                                     spec.params["g"]),
        0.0, t_entry, (0.0, 1.0), tol=tol_ode)
    ts = np.linspace(0.0, t_entry * 0.999, 400)
    far_match = max(abs(traj.state(t)[0] - ref(t)[0]) for t in ts)

    bs, peaks = [], []
    for e in gauge.eps_grid[-8:]:
        short = integrate(spec, e, (0.0, 1.0), (0.0, 0.3), tol=tol_ode)
        tc = short.crossing_times()
        tq = np.linspace(max(0.0, tc[0] - 0.01), min(0.3, tc[-1] + 0.01), 1501)
        peaks.append(max(abs(short.rhs_at(t)) for t in tq))
        bs.append(spec.b(e))
    slope = float(np.polyfit(np.log(bs), np.log(peaks), 1)[0])

    measured = {"far_segment_energy_drift": seg_drift,
                "cross_layer_energy_drift": cross_drift,
                "far_region_match": far_match,
                "corner_growth_slope": slope}
    tol = {"far_segment_energy_drift": 1e-6,
           "cross_layer_energy_drift": 1e-3,
           "far_region_match": 1e-6,
           "corner_growth_slope": 0.4}
    passed = (measured["far_segment_energy_drift"] <= tol["far_segment_energy_drift"]
              and measured["cross_layer_energy_drift"] <= tol["cross_layer_energy_drift"]
              and measured["far_region_match"] <= tol["far_region_match"]
              and measured["corner_growth_slope"] >= tol["corner_growth_slope"])
    return CriterionResult(4, "wrap-length pendulum: energy bookkeeping, "
                           "far-region dynamics, corner growth", passed,
                           measured, tol,
                           notes="corner_growth_slope is a lower bound (>=)")


def criterion_5_small_oscillations() -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(4)
    spec = paper_pendulum(mol, gauge)
    eps = gauge.eps_grid[-1]
    theta1 = 0.01
    w = math.sqrt(spec.params["g"] / (spec.params["L1"] + spec.params["L2"]))
    quarter = 0.5 * math.pi / w
    traj = integrate(spec, eps, (theta1, 0.0), (0.0, quarter), tol=1e-12)
    ref = small_oscillation_reference(spec, "below", (0.0, theta1))
    ts = np.linspace(0.0, quarter, 600)
    err = max(abs(traj.state(t)[0] - ref(t)) for t in ts)
    measured = {"sup_error_first_quarter_period": err}
    tol = {"sup_error_first_quarter_period": 5e-5}
    return CriterionResult(5, "small oscillations vs linearized reference",
                           err <= 5e-5, measured, tol)


def criterion_6_damped(tol_ode: float = 1e-10) -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(4)
    spec = paper_damped(mol, gauge)
    eps = gauge.eps_grid[-1]
    p = spec.params
    traj = integrate(spec, eps, (0.0, 1.0), (0.0, 10.0), tol=tol_ode)

    def ref_rhs(t, y):
        return np.array([y[1], -2.0 * p["beta1"] * y[1]
                         - p["g"] * math.sin(y[0]) / p["Lambda"]])

    ref = integrate_adaptive(ref_rhs, 0.0, 10.0, (0.0, 1.0), tol=tol_ode)

    def peaks_of(fn):
        ts = np.linspace(0.0, 10.0, 4001)
        vals = np.array([abs(fn(t)) for t in ts])
        out = []
        for i in range(1, len(ts) - 1):
            if vals[i] > vals[i - 1] and vals[i] >= vals[i + 1]:
                # parabola through the three samples sharpens the peak value
                y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
                denom = y0 - 2.0 * y1 + y2
                delta = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
                peak = y1 - 0.25 * (y0 - y2) * delta
                out.append((ts[i], float(peak)))
        return out

    peaks_sys = peaks_of(lambda t: traj.state(t)[0])
    peaks_ref = peaks_of(lambda t: ref(t)[0])
    first_exit = traj.crossing_times()[0]
    margin = 0.0
    envelope_ok = True
    for (t_s, v_s), (_t_r, v_r) in zip(peaks_sys, peaks_ref):
        if t_s <= first_exit:
            continue
        envelope_ok = envelope_ok and (v_s < v_r)
        margin = max(margin, v_s - v_r)

    # acceleration jump at matched crossing velocity, judged on a deep grid
    # so the gravity-gradient contamination across the layer is subordinate
    cross_state = traj.solution(first_exit)
    thd_cross = float(cross_state[1])
    deep_gauge = gauge_from_range(2.0 ** -4, 2.0 ** -24, 6)
    deep_spec = paper_damped(mol, deep_gauge)
    eps_deep = deep_gauge.eps_grid[-1]
    b_deep = deep_spec.b(eps_deep)
    inside = damped_rhs(deep_spec, eps_deep, 0.0, p["theta0"] - 1.0 / b_deep,
                        thd_cross)
    outside = damped_rhs(deep_spec, eps_deep, 0.0, p["theta0"] + 1.0 / b_deep,
                         thd_cross)
    expected = -2.0 * (p["beta2"] - p["beta1"]) * thd_cross
    jump_rel = abs((inside - outside) - expected) / abs(expected)

    measured = {"envelope_excess_after_first_transit": margin,
                "envelope_strictly_below": float(envelope_ok),
                "acceleration_jump_rel_error": jump_rel}
    tol = {"envelope_excess_after_first_transit": 0.0,
           "envelope_strictly_below": 1.0,
           "acceleration_jump_rel_error": 0.05}
    passed = envelope_ok and jump_rel <= 0.05
    return CriterionResult(6, "two-media damping: envelope and acceleration "
                           "jump", passed, measured, tol)


def criterion_7_pu(tol_ode: float = 1e-10) -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(4)
    spec = paper_pu(mol, gauge)
    eps = gauge.eps_grid[-1]
    p = spec.params
    ic = (1.0, 2.0, 0.0, 1.0)

    # Closed-form constants: the reported values pair with the pre-switch
    # frequencies (w1hat, w2hat) = (0.7, 1.2), which is what the switched
    # coefficient evaluates to before ts.
    fit = pu_analytic(p["w1hat"], p["w2hat"], ic)
    a1_err = abs(fit.A1 - 6.02827)
    a2_err = abs(fit.A2 - 1.81181)
    phi1_err = min(abs(fit.phi1 - 0.254175), abs(fit.phi1 - (-2.88742)))
    phi2_err = min(abs(fit.phi2 - 0.288674), abs(fit.phi2 - (-2.85292)))

    traj = integrate(spec, eps, ic, (0.0, 30.0), tol=tol_ode)
    b = spec.b(eps)
    ts_pre = np.linspace(0.0, p["ts"] - 4.0 / b, 500)
    pre_err = max(abs(traj.state(t)[0] - fit(t)) for t in ts_pre)
    t_anchor = p["ts"] + 4.0 / b
    post_fit = pu_analytic(p["w1"], p["w2"], traj.state(t_anchor), t0=t_anchor)
    ts_post = np.linspace(t_anchor, 30.0, 500)
    post_err = max(abs(traj.state(t)[0] - post_fit(t)) for t in ts_post)

    E = traj.monitors["energy"]
    pre_mask = traj.times < p["ts"] - 4.0 / b
    post_mask = traj.times > p["ts"] + 4.0 / b
    drift = max(_drift(E[pre_mask]), _drift(E[post_mask]))
    e_pre = float(np.mean(E[pre_mask]))
    e_post = float(np.mean(E[post_mask]))

    measured = {"A1_error": a1_err, "A2_error": a2_err,
                "phi1_error": phi1_err, "phi2_error": phi2_err,
                "sidewise_match_sup": max(pre_err, post_err),
                "per_side_energy_drift": drift,
                "energy_pre_switch": e_pre, "energy_post_switch": e_post,
                "energy_drop": e_pre - e_post}
    tol = {"A1_error": 1e-4, "A2_error": 1e-4, "phi1_error": 1e-4,
           "phi2_error": 1e-4, "sidewise_match_sup": 1e-4,
           "per_side_energy_drift": 1e-6, "energy_drop": 0.0}
    passed = (a1_err <= 1e-4 and a2_err <= 1e-4 and phi1_err <= 1e-4
              and phi2_err <= 1e-4 and max(pre_err, post_err) <= 1e-4
              and drift <= 1e-6 and e_pre - e_post > 0.0)
    notes = ("energy decreases across the switch in forward time; the "
             "pre-switch side carries the larger frequencies (0.7, 1.2) and "
             "the higher energy")
    return CriterionResult(7, "switched-frequency oscillator: closed form, "
                           "side-wise match, energy drop", passed, measured,
                           tol, notes=notes)


def criterion_8_variational(tol_ode: float = 1e-10) -> CriterionResult:
    gauge = gauge_from_range(2.0 ** -4, 2.0 ** -15, 12)
    mol = build_mollifier(4)
    eps = gauge.eps_grid[-1]

    worst = {"el_residual_rel": 0.0, "phi_recurrence_rel": 0.0,
             "dbr_residual_rel": 0.0, "noether_drift": 0.0,
             "dalembert_residual_rel": 0.0}

    def scan(spec, ic, t_span, conservative: bool):
        traj = integrate(spec, eps, ic, t_span, tol=tol_ode)
        lag = lagrangian_for(spec, eps)
        ts = sample_times_away_from_layers(traj, n=30)
        if conservative:
            for t in ts:
                terms = el_terms(lag, traj, eps, t)
                scale = 1.0 + sum(abs(v) for v in terms)
                worst["el_residual_rel"] = max(worst["el_residual_rel"],
                                               abs(sum(terms)) / scale)
                for j in range(1, lag.order + 1):
                    r = phi_recurrence_residual(lag, traj, eps, t, j)
                    worst["phi_recurrence_rel"] = max(
                        worst["phi_recurrence_rel"], abs(r) / scale)
                r = dbr_residual(lag, traj, eps, t)
                worst["dbr_residual_rel"] = max(worst["dbr_residual_rel"],
                                                abs(r) / scale)
            sym = Symmetry.time_translation()
            for a, b in traj.far_segments():
                seg_ts = [t for t in ts if a <= t <= b]
                if len(seg_ts) < 3:
                    continue
                cs = np.array([noether_constant(lag, traj, sym, eps, t)
                               for t in seg_ts])
                worst["noether_drift"] = max(worst["noether_drift"], _drift(cs))
        else:
            Q = damped_force(spec, eps)
            for t in ts:
                terms = el_terms(lag, traj, eps, t)
                qs = traj.derivs(t, 1)
                scale = 1.0 + sum(abs(v) for v in terms) + abs(Q(eps, t, qs))
                r = dalembert_residual(lag, Q, traj, eps, t)
                worst["dalembert_residual_rel"] = max(
                    worst["dalembert_residual_rel"], abs(r) / scale)

    scan(paper_pendulum(mol, gauge), (0.0, 1.0), (0.0, 6.0), True)
    scan(paper_pu(mol, gauge), (1.0, 2.0, 0.0, 1.0), (0.0, 30.0), True)
    scan(paper_damped(mol, gauge), (0.0, 1.0), (0.0, 6.0), False)

    tol = {"el_residual_rel": 1e-5, "phi_recurrence_rel": 1e-5,
           "dbr_residual_rel": 1e-5, "noether_drift": 1e-5,
           "dalembert_residual_rel": 1e-5}
    passed = all(worst[k] <= tol[k] for k in tol)
    return CriterionResult(8, "variational identities along integrated "
                           "trajectories", passed, worst, tol)


def criterion_9_optctrl() -> CriterionResult:
    from .experiments import lqr_problem
    P = lqr_problem()
    sweep = solve_wps(P, step=0.5, max_iter=200, grad_tol=1e-8, nodes=2001)
    ustar = lambda t: math.sinh(t - 1.0) / math.cosh(1.0)
    ts = np.linspace(0.0, 1.0, 1001)
    u_err = max(abs(sweep.u(t) - ustar(t)) for t in ts)

    u0 = lambda t: 0.3 * math.cos(t)
    ubar = lambda t: math.sin(math.pi * t)
    v1, v2 = control_first_variation(P, u0, ubar)
    routes_rel = abs(v1 - v2) / max(abs(v1), 1e-12)
    h = 1e-5
    fd = (cost(P, lambda t: u0(t) + h * ubar(t))
          - cost(P, lambda t: u0(t) - h * ubar(t))) / (2.0 * h)
    oracle_rel = abs(v1 - fd) / max(abs(v1), 1e-12)

    Pn = ControlProblem(
        L=lambda t, q, u: 0.5 * (q * q + u * u),
        dL_dq=lambda t, q, u: q, dL_du=lambda t, q, u: u,
        phi=lambda t, q, u: -math.sin(q) + u,
        dphi_dq=lambda t, q, u: -math.cos(q),
        dphi_du=lambda t, q, u: 1.0,
        q1=1.0, t_span=(0.0, 1.0))
    hs = (1e-1, 1e-2, 1e-3, 1e-4)
    ratios = order1_stability(Pn, u0, ubar, hs)
    order1_spread = max(ratios) / min(ratios) - 1.0
    slope2 = order2_stability_slope(Pn, u0, ubar, hs)

    res = hamiltonian_time_identity(P, sweep)
    h_scale = 1.0 + abs(hamiltonian(P, 0.0, sweep.q(0.0)[0], sweep.u(0.0),
                                    sweep.p(0.0)))
    h_rel = float(res[:, 1].max()) / h_scale

    measured = {"iterations": sweep.iterations, "u_sup_error": u_err,
                "variation_routes_rel": routes_rel,
                "variation_fd_oracle_rel": oracle_rel,
                "order1_ratio_spread": order1_spread,
                "order2_slope": slope2,
                "hamiltonian_identity_rel": h_rel}
    tol = {"iterations": 200, "u_sup_error": 1e-5,
           "variation_routes_rel": 1e-6, "variation_fd_oracle_rel": 1e-5,
           "order1_ratio_spread": 0.2, "order2_slope": 1.9,
           "hamiltonian_identity_rel": 1e-5}
    passed = (sweep.iterations <= 200 and sweep.converged and u_err <= 1e-5
              and routes_rel <= 1e-6 and oracle_rel <= 1e-5
              and order1_spread <= 0.2 and slope2 >= 1.9 and h_rel <= 1e-5)
    return CriterionResult(9, "control sweep benchmarks", passed, measured,
                           tol, notes="order2_slope is a lower bound (>=)")


def _determinism_battery(out: Path) -> dict:
    from .experiments import load_config, run_experiment

    cfgs = {
        "embed": ('experiment = "embed_profiles"\n'
                  '[gauge]\npoints = 6\neps_min = 0.0009765625\n'),
        "pendulum": ('experiment = "pendulum"\nsystem = "pendulum"\n'
                     't_span = [0.0, 1.5]\n'
                     '[params]\nL1 = 0.4\nL2 = 0.2\ng = 9.8\n'
                     'theta0 = 0.07853981633974483\nm = 1.0\n'
                     '[ic]\nq0 = 0.0\nq1 = 1.0\n'),
        "optctrl": ('experiment = "optctrl_lqr"\n[control]\nnodes = 501\n'),
    }
    hashes = {}
    for name, text in cfgs.items():
        sub = out / name
        run_experiment(load_config(text), sub)
        for f in sorted(sub.iterdir()):
            hashes[f"{name}/{f.name}"] = hashlib.sha256(
                f.read_bytes()).hexdigest()
    return hashes


def criterion_10_determinism(scratch: Path | None = None) -> CriterionResult:
    base = Path(scratch) if scratch else Path(tempfile.mkdtemp(prefix="singvar_det_"))
    h1 = _determinism_battery(base / "run1")
    h2 = _determinism_battery(base / "run2")
    mismatches = sorted(k for k in h1 if h1.get(k) != h2.get(k))
    measured = {"files_compared": len(h1), "mismatched_files": len(mismatches)}
    tol = {"mismatched_files": 0}
    return CriterionResult(10, "byte-identical artifacts across repeated runs",
                           not mismatches and len(h1) > 0, measured, tol,
                           notes=",".join(mismatches))


# ---------------------------------------------------------------------------
# driver

_CRITERIA = (
    (1, "kernel moments", lambda cfg: criterion_1_mollifier(cfg.get("moment_order", 4))),
    (2, "embedding identities", lambda cfg: criterion_2_embedding(cfg.get("moment_order", 4))),
    (3, "field calculus identities", lambda cfg: criterion_3_gsf_properties(cfg.get("seed", 20260808))),
    (4, "wrap-length pendulum", lambda cfg: criterion_4_pendulum()),
    (5, "small oscillations", lambda cfg: criterion_5_small_oscillations()),
    (6, "two-media damping", lambda cfg: criterion_6_damped()),
    (7, "switched-frequency oscillator", lambda cfg: criterion_7_pu()),
    (8, "variational identities", lambda cfg: criterion_8_variational()),
    (9, "control sweep benchmarks", lambda cfg: criterion_9_optctrl()),
    (10, "determinism", lambda cfg: criterion_10_determinism(cfg.get("scratch"))),
)


def run_acceptance(config_dir: Path | None = None,
                   out_dir: Path | str = "acceptance_out",
                   echo=print) -> list[CriterionResult]:
    """Run every criterion, echo one pass/fail line each, and write
    acceptance_report.json (always, even on failure)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    settings = {"scratch": out / "determinism"}
    if config_dir is not None:
        settings.update(_read_acceptance_settings(Path(config_dir)))
    results = []
    for cid, short_title, make in _CRITERIA:
        try:
            res = make(settings)
        except SingvarError as exc:
            res = CriterionResult(cid, short_title, False,
                                  {"error": str(exc)}, {})
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        echo(f"[{status}] criterion {res.cid}: {res.title}")
    report = {
        "library_version": __version__,
        "criteria": [r.as_json() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    (out / "acceptance_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", newline="\n")
    return results


def _read_acceptance_settings(config_dir: Path) -> dict:
    """Pull overridable knobs (kernel moment order, seed) from the bundled
    config directory, so a misconfigured bundle shows up as a red criterion."""
    from .experiments import load_config

    settings = {}
    embed = config_dir / "embed_profiles.toml"
    if embed.exists():
        raw = load_config(embed).raw
        settings["moment_order"] = raw["mollifier"]["moment_order"]
        settings["seed"] = raw["seed"]
    return settings
