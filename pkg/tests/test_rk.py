import math

import numpy as np
import pytest

from singvar.errors import DivergenceError, StiffnessError
from singvar.rk import integrate_adaptive


def harmonic(t, y):
    return np.array([y[1], -y[0]])


class TestAccuracy:
    def test_endpoint_accuracy(self):
        sol = integrate_adaptive(harmonic, 0.0, 10.0, [1.0, 0.0], tol=1e-10)
        assert abs(sol(10.0)[0] - math.cos(10.0)) <= 1e-8

    def test_dense_output_accuracy(self):
        sol = integrate_adaptive(harmonic, 0.0, 10.0, [1.0, 0.0], tol=1e-10)
        err = max(abs(sol(t)[0] - math.cos(t)) for t in np.linspace(0, 10, 997))
        assert err <= 1e-8

    def test_tolerance_scaling(self):
        errs = []
        for tol in (1e-6, 1e-9):
            sol = integrate_adaptive(harmonic, 0.0, 10.0, [1.0, 0.0], tol=tol)
            errs.append(abs(sol(10.0)[0] - math.cos(10.0)))
        assert errs[1] < errs[0]

    def test_exponential_growth(self):
        sol = integrate_adaptive(lambda t, y: y, 0.0, 3.0, [1.0], tol=1e-11)
        assert sol(3.0)[0] == pytest.approx(math.exp(3.0), rel=1e-9)

    def test_time_dependent_rhs(self):
        sol = integrate_adaptive(lambda t, y: np.array([math.sin(t) * y[0]]),
                                 0.0, 2.0, [1.0], tol=1e-11)
        want = math.exp(1.0 - math.cos(2.0))
        assert sol(2.0)[0] == pytest.approx(want, rel=1e-9)


class TestEvents:
    def test_zero_crossing_located(self):
        sol = integrate_adaptive(harmonic, 0.0, 4.0, [1.0, 0.0], tol=1e-10,
                                 events=[lambda t, y: y[0]])
        assert len(sol.events) == 1
        _, t_ev, y_ev = sol.events[0]
        assert t_ev == pytest.approx(math.pi / 2, abs=1e-10)
        assert abs(y_ev[0]) <= 1e-10

    def test_multiple_events_ordered(self):
        sol = integrate_adaptive(harmonic, 0.0, 7.0, [1.0, 0.0], tol=1e-10,
                                 events=[lambda t, y: y[0]])
        times = [t for _, t, _ in sol.events]
        assert times == sorted(times)
        assert len(times) == 2  # pi/2 and 3pi/2

    def test_step_aligns_at_event(self):
        sol = integrate_adaptive(harmonic, 0.0, 4.0, [1.0, 0.0], tol=1e-10,
                                 events=[lambda t, y: y[0]])
        _, t_ev, _ = sol.events[0]
        assert any(abs(t - t_ev) < 1e-12 for t in sol.step_times)


class TestCapsAndFailures:
    def test_max_step_cap_respected(self):
        cap_region = (2.0, 2.5)

        def cap(t, y):
            return 0.01 if cap_region[0] <= t <= cap_region[1] else math.inf

        sol = integrate_adaptive(harmonic, 0.0, 4.0, [1.0, 0.0], tol=1e-8,
                                 max_step_fn=cap)
        inside = [(t0, t1) for t0, t1 in zip(sol.seg_t0, sol.seg_t1)
                  if t0 >= cap_region[0] and t1 <= cap_region[1]]
        assert inside and max(t1 - t0 for t0, t1 in inside) <= 0.0100001

    def test_divergence_detected(self):
        with pytest.raises(DivergenceError):
            integrate_adaptive(lambda t, y: y * y, 0.0, 5.0, [1.0], tol=1e-9)

    def test_step_underflow_detected(self):
        def cap(t, y):
            return 1e-16

        with pytest.raises(StiffnessError):
            integrate_adaptive(harmonic, 0.0, 1.0, [1.0, 0.0], tol=1e-8,
                               max_step_fn=cap)

    def test_out_of_span_query_rejected(self):
        sol = integrate_adaptive(harmonic, 0.0, 1.0, [1.0, 0.0], tol=1e-8)
        with pytest.raises(ValueError):
            sol(2.0)

    def test_backwards_span_rejected(self):
        with pytest.raises(ValueError):
            integrate_adaptive(harmonic, 1.0, 0.0, [1.0, 0.0])


class TestDeterminism:
    def test_identical_runs_bitwise(self):
        a = integrate_adaptive(harmonic, 0.0, 5.0, [1.0, 0.0], tol=1e-9)
        b = integrate_adaptive(harmonic, 0.0, 5.0, [1.0, 0.0], tol=1e-9)
        assert np.array_equal(a.step_times, b.step_times)
        assert np.array_equal(a.step_states, b.step_states)
