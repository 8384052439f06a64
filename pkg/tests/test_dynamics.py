import math

import numpy as np
import pytest

from singvar.errors import (
    CapabilityError,
    DegenerateSystemError,
    ValidationError,
)
from singvar.dynamics import (
    SystemName,
    SystemSpec,
    constant_length_pendulum_rhs,
    damped_rhs,
    energy,
    integrate,
    join_references,
    pendulum_rhs,
    pu_analytic,
    pu_rhs,
    small_oscillation_reference,
)
from singvar.rk import integrate_adaptive

TH0 = math.pi / 40


class TestSpecValidation:
    def test_missing_params_rejected(self, mol4, gauge):
        with pytest.raises(ValidationError):
            SystemSpec(SystemName.PENDULUM, dict(L1=0.4), mol4, gauge)

    def test_nonpositive_params_rejected(self, mol4, gauge):
        with pytest.raises(ValidationError):
            SystemSpec(SystemName.PENDULUM,
                       dict(L1=-0.4, L2=0.2, g=9.8, theta0=TH0, m=1.0),
                       mol4, gauge)

    def test_orders_and_layers(self, pendulum_spec, damped_spec, pu_spec):
        assert pendulum_spec.order == 2
        assert damped_spec.order == 2
        assert pu_spec.order == 4
        assert pendulum_spec.layers == (TH0,)
        assert damped_spec.layers == (-TH0, TH0)
        assert pu_spec.layers == (15.0,)


class TestPendulumRhs:
    def test_far_below_uses_total_length(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        th, thd = -0.15, 0.7
        got = pendulum_rhs(pendulum_spec, eps, 0.0, th, thd)
        assert got == pytest.approx(-9.8 * math.sin(th) / 0.6, rel=1e-12)

    def test_far_above_uses_short_length(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        th, thd = 0.3, -0.4
        got = pendulum_rhs(pendulum_spec, eps, 0.0, th, thd)
        assert got == pytest.approx(-9.8 * math.sin(th) / 0.2, rel=1e-12)

    def test_length_at_wrap_angle_is_midpoint(self, pendulum_spec, gauge,
                                              mol4):
        eps = gauge.eps_grid[-1]
        b = pendulum_spec.b(eps)
        h = mol4.primitive_scalar(0.0)
        lam = h * 0.4 + 0.2
        assert lam == pytest.approx(0.4, abs=1e-8)  # L2 + L1/2


class TestDampedRhs:
    def test_outside_wedge_uses_air(self, damped_spec, gauge):
        eps = gauge.eps_grid[-1]
        th, thd = 0.3, 0.5
        got = damped_rhs(damped_spec, eps, 0.0, th, thd)
        want = -2 * 0.0064 * thd - 9.8 * math.sin(th) / 0.6
        assert got == pytest.approx(want, rel=1e-12)

    def test_center_uses_water(self, damped_spec, gauge):
        eps = gauge.eps_grid[-1]
        thd = -0.8
        got = damped_rhs(damped_spec, eps, 0.0, 0.0, thd)
        assert got == pytest.approx(-2 * 0.3859 * thd, rel=1e-10)

    def test_jump_matches_damping_difference(self, damped_spec):
        # direct two-sided evaluation at matched velocity on a deep grid
        from singvar.gauge import gauge_from_range
        deep = gauge_from_range(2.0 ** -4, 2.0 ** -24, 6)
        spec = SystemSpec(SystemName.DAMPED_TWO_MEDIA, damped_spec.params,
                          damped_spec.mollifier, deep)
        eps = deep.eps_grid[-1]
        b = spec.b(eps)
        thd = 1.0
        inside = damped_rhs(spec, eps, 0.0, TH0 - 1.0 / b, thd)
        outside = damped_rhs(spec, eps, 0.0, TH0 + 1.0 / b, thd)
        want = -2 * (0.3859 - 0.0064) * thd
        assert (inside - outside) == pytest.approx(want, rel=0.05)


class TestPuRhs:
    def test_constant_frequency_characteristic_root(self, pu_spec, gauge):
        # q = sin(w1 t) solves the constant-coefficient equation exactly
        eps = gauge.eps_grid[-1]
        w1, w2 = 0.7, 1.2  # pre-switch side values
        t = 3.0
        q = math.sin(w1 * t)
        qd = w1 * math.cos(w1 * t)
        qdd = -w1 * w1 * q
        qddd = -w1 ** 3 * math.cos(w1 * t)
        got = pu_rhs(pu_spec, eps, t, q, qd, qdd, qddd)
        assert got == pytest.approx(w1 ** 4 * q, rel=1e-9, abs=1e-12)

    def test_hat_frequencies_before_switch(self, pu_spec, gauge):
        from singvar.dynamics import pu_frequencies
        eps = gauge.eps_grid[-1]
        w1, w2, w1d, w2d = pu_frequencies(pu_spec, eps, 3.0)
        assert (w1, w2) == (0.7, 1.2)
        assert w1d == 0.0 and w2d == 0.0

    def test_prime_frequencies_after_switch(self, pu_spec, gauge):
        from singvar.dynamics import pu_frequencies
        eps = gauge.eps_grid[-1]
        w1, w2, w1d, w2d = pu_frequencies(pu_spec, eps, 25.0)
        assert (w1, w2) == (0.5, 1.0)
        assert w1d == 0.0 and w2d == 0.0


class TestEnergy:
    def test_pendulum_reference_value(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        E = energy(pendulum_spec, eps, (0.0, 1.0))
        want = 0.5 * 0.6 ** 2 - 9.8 * 0.6
        assert E == pytest.approx(want, abs=1e-10)

    def test_pu_reference_value(self, pu_spec, gauge):
        eps = gauge.eps_grid[-1]
        E = energy(pu_spec, eps, (1.0, 2.0, 0.0, 1.0), t=0.0)
        assert E == pytest.approx(6.2128, abs=1e-10)

    def test_damped_has_no_energy_monitor(self, damped_spec, gauge):
        with pytest.raises(CapabilityError):
            energy(damped_spec, gauge.eps_grid[-1], (0.0, 1.0))


class TestIntegrate:
    def test_ic_length_checked(self, pendulum_spec, gauge):
        with pytest.raises(ValidationError):
            integrate(pendulum_spec, gauge.eps_grid[-1], (0.0, 1.0, 0.0),
                      (0.0, 1.0))

    def test_tolerance_checked(self, pendulum_spec, gauge):
        with pytest.raises(ValidationError):
            integrate(pendulum_spec, gauge.eps_grid[-1], (0.0, 1.0),
                      (0.0, 1.0), tol=0.0)

    def test_pendulum_oscillates_and_crosses_wrap_angle(self, pendulum_spec,
                                                        gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(pendulum_spec, eps, (0.0, 1.0), (0.0, 3.0), tol=1e-9)
        assert traj.states[:, 0].max() > TH0
        assert traj.states[:, 0].min() < -0.1
        assert len(traj.crossing_times()) >= 2

    def test_energy_drift_small_through_crossings(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(pendulum_spec, eps, (0.0, 1.0), (0.0, 3.0), tol=1e-10)
        E = traj.monitors["energy"]
        assert (E.max() - E.min()) / abs(E.mean()) <= 1e-6

    def test_damped_decays_faster_than_reference(self, damped_spec, gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(damped_spec, eps, (0.0, 1.0), (0.0, 6.0), tol=1e-9)
        ref = integrate_adaptive(
            lambda t, y: np.array([y[1], -2 * 0.0064 * y[1]
                                   - 9.8 * math.sin(y[0]) / 0.6]),
            0.0, 6.0, (0.0, 1.0), tol=1e-9)
        t_late = np.linspace(4.0, 6.0, 200)
        amp_sys = max(abs(traj.state(t)[0]) for t in t_late)
        amp_ref = max(abs(ref(t)[0]) for t in t_late)
        assert amp_sys < amp_ref

    def test_pu_energy_steps_down_at_switch(self, pu_spec, gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(pu_spec, eps, (1.0, 2.0, 0.0, 1.0), (0.0, 30.0),
                         tol=1e-9)
        E = traj.monitors["energy"]
        b = pu_spec.b(eps)
        pre = E[traj.times < 15.0 - 4.0 / b]
        post = E[traj.times > 15.0 + 4.0 / b]
        assert pre.mean() == pytest.approx(6.2128, abs=1e-6)
        assert post.mean() < pre.mean()

    def test_derivs_supplies_state_plus_rhs(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(pendulum_spec, eps, (0.0, 1.0), (0.0, 1.0), tol=1e-9)
        d = traj.derivs(0.5, 2)
        assert len(d) == 3
        assert d[2] == pytest.approx(traj.rhs_at(0.5))
        with pytest.raises(CapabilityError):
            traj.derivs(0.5, 3)

    def test_far_segments_avoid_layers(self, pendulum_spec, gauge):
        eps = gauge.eps_grid[-1]
        traj = integrate(pendulum_spec, eps, (0.0, 1.0), (0.0, 3.0), tol=1e-9)
        b = pendulum_spec.b(eps)
        for a, bb in traj.far_segments():
            for t in np.linspace(a, bb, 20):
                assert abs(traj.state(t)[0] - TH0) > 3.9 / b


class TestPuAnalytic:
    def test_paper_constants_from_pre_switch_frequencies(self):
        fit = pu_analytic(0.7, 1.2, (1.0, 2.0, 0.0, 1.0))
        assert fit.A1 == pytest.approx(6.02827, abs=1e-4)
        assert fit.A2 == pytest.approx(1.81181, abs=1e-4)
        assert fit.phi1 == pytest.approx(0.254175, abs=1e-4)
        assert fit.phi2 == pytest.approx(-2.85292, abs=1e-4)

    def test_zero_ic_gives_zero_amplitudes(self):
        fit = pu_analytic(0.5, 1.0, (0.0, 0.0, 0.0, 0.0))
        assert fit.A1 == 0.0 and fit.A2 == 0.0

    def test_evaluator_reproduces_ic(self):
        ic = (1.0, 2.0, 0.0, 1.0)
        fit = pu_analytic(0.5, 1.0, ic)
        for order, want in enumerate(ic):
            assert fit(0.0, order) == pytest.approx(want, abs=1e-10)

    def test_anchor_time_offset(self):
        ic = (0.3, -0.4, 0.1, 0.2)
        fit = pu_analytic(0.5, 1.0, ic, t0=7.0)
        for order, want in enumerate(ic):
            assert fit(7.0, order) == pytest.approx(want, abs=1e-10)

    def test_equal_frequencies_rejected(self):
        with pytest.raises(DegenerateSystemError):
            pu_analytic(1.0, 1.0, (1.0, 0.0, 0.0, 0.0))

    def test_nonpositive_frequency_rejected(self):
        with pytest.raises(ValidationError):
            pu_analytic(-0.5, 1.0, (1.0, 0.0, 0.0, 0.0))


class TestSmallOscillations:
    def test_below_anchor_conditions(self, pendulum_spec):
        ref = small_oscillation_reference(pendulum_spec, "below", (0.5, 0.02))
        assert ref(0.5) == pytest.approx(0.02)
        assert ref(0.5, 1) == pytest.approx(0.0, abs=1e-15)

    def test_natural_frequency_value(self, pendulum_spec):
        ref = small_oscillation_reference(pendulum_spec, "below", (0.0, 1.0))
        w = math.sqrt(9.8 / 0.6)
        assert w == pytest.approx(4.0415, abs=1e-4)
        assert ref(math.pi / w) == pytest.approx(-1.0, abs=1e-12)

    def test_above_anchor_conditions(self, pendulum_spec):
        t3, th3, thd3 = 2.0, 0.15, -0.3
        ref = small_oscillation_reference(pendulum_spec, "above",
                                          (t3, th3, thd3))
        assert ref(t3) == pytest.approx(th3)
        assert ref(t3, 1) == pytest.approx(thd3, abs=1e-12)

    def test_linearization_error_cubic_in_amplitude(self, pendulum_spec,
                                                    gauge):
        eps = gauge.eps_grid[-1]
        w = math.sqrt(9.8 / 0.6)
        quarter = 0.5 * math.pi / w
        traj = integrate(pendulum_spec, eps, (0.01, 0.0), (0.0, quarter),
                         tol=1e-12)
        ref = small_oscillation_reference(pendulum_spec, "below", (0.0, 0.01))
        err = max(abs(traj.state(t)[0] - ref(t))
                  for t in np.linspace(0.0, quarter, 300))
        assert err <= 5e-5

    def test_join_blends_between_references(self, pendulum_spec, gauge, mol4):
        eps = gauge.eps_grid[-1]
        below = small_oscillation_reference(pendulum_spec, "below",
                                            (0.0, -0.01))
        above = small_oscillation_reference(pendulum_spec, "above",
                                            (2.0, 0.01, 0.0))
        joined = join_references(below, above, 1.0, mol4, gauge, eps)
        assert joined(0.2) == pytest.approx(below(0.2), abs=1e-12)
        assert joined(1.8) == pytest.approx(above(1.8), abs=1e-12)

    def test_pendulum_only(self, pu_spec):
        with pytest.raises(CapabilityError):
            small_oscillation_reference(pu_spec, "below", (0.0, 0.01))

    def test_bad_side_rejected(self, pendulum_spec):
        with pytest.raises(ValidationError):
            small_oscillation_reference(pendulum_spec, "middle", (0.0, 0.01))


class TestCornerGrowth:
    def test_peak_acceleration_grows_with_sharpness(self, pendulum_spec,
                                                    gauge):
        bs, peaks = [], []
        for eps in gauge.eps_grid[-4:]:
            traj = integrate(pendulum_spec, eps, (0.0, 1.0), (0.0, 0.3),
                             tol=1e-9)
            tc = traj.crossing_times()
            ts = np.linspace(tc[0] - 0.01, min(0.3, tc[-1] + 0.01), 800)
            peaks.append(max(abs(traj.rhs_at(float(t))) for t in ts))
            bs.append(pendulum_spec.b(eps))
        slope = np.polyfit(np.log(bs), np.log(peaks), 1)[0]
        assert slope >= 0.4
