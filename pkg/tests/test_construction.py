import json

import numpy as np
import pytest

from nonsymkernel.construction import (DELTA_MARGIN, CoefficientField, ConstructionError,
                                       Counterexample, GridSpec, build_for_r, choose_r,
                                       choose_ramp, coefficient_a, coefficient_c, find_delta,
                                       drift_values, log_grid, measure_drift_bound, normalize,
                                       ramp_lower_bound, ramp_margin)
from nonsymkernel.operators import apply_L, apply_L2, apply_L3
from nonsymkernel.params import ProblemParams, reduction_constants
from nonsymkernel.profiles import ClampedRamp, Modulus, holder_wedge, smooth_step, sum_profiles

P = ProblemParams(0.5, 1.0, 2.0, 1)
K = reduction_constants(P)


@pytest.fixture(scope="module")
def small_run():
    return normalize(build_for_r(P, 2.0**-5, Modulus.power(1.0, 0.1)))


class TestChooseR:
    def test_linear_modulus(self):
        assert choose_r(Modulus.power(1.0, 1.0)) == 0.25

    def test_power_one_tenth(self):
        r = choose_r(Modulus.power(1.0, 0.1))
        assert r == 2.0**-11
        assert Modulus.power(1.0, 0.1)(2 * r) == pytest.approx(0.5)

    def test_log_modulus(self):
        assert choose_r(Modulus.log(1.0)) == 2.0**-4

    def test_safety_shrinks_r(self):
        assert choose_r(Modulus.power(1.0, 1.0), 0.01) == 2.0**-8

    def test_too_flat(self):
        with pytest.raises(ConstructionError) as exc:
            choose_r(Modulus.power(1.0, 1e-4))
        assert exc.value.stage == "choose_r"

    @pytest.mark.parametrize("safety", [0.0, 1.0])
    def test_bad_safety(self, safety):
        with pytest.raises(ValueError):
            choose_r(Modulus.power(1.0, 1.0), safety)


class TestGrids:
    def test_log_grid(self):
        g = log_grid(4, 10)
        assert g.size == 4 * 9
        assert g.max() == 0.5 and g.min() == pytest.approx(2.0 ** -(9.75))
        assert np.all(np.diff(g) > 0)

    def test_linear_grid_is_punctured_and_avoids_kinks(self):
        spec = GridSpec()
        x = spec.linear(kinks=(0.0, 0.5))
        assert x.size == 128
        assert np.all(np.abs(x) > 1e-4)
        assert np.all(np.abs(x - 0.5) >= 1e-6 - 1e-15)

    def test_inner_grid_reaches_down_to_floor(self):
        spec = GridSpec()
        x = spec.inner(kinks=(0.0,))
        assert np.all(np.abs(x) < 1e-4)
        assert np.min(np.abs(x)) == pytest.approx(2.0**-39.5)
        assert spec.verification((0.0,)).size == 128 + x.size


class TestCoefficientField:
    def test_table_takes_precedence(self):
        f = CoefficientField("a", lambda x: 2 * x, {0.5: -7.0})
        assert f(0.5) == -7.0 and f(0.25) == 0.5
        assert np.array_equal(f(np.array([0.5, 1.0])), [-7.0, 2.0])

    def test_memoize_and_round_trip(self):
        f = CoefficientField("c", lambda x: x**2)
        f.memoize([0.1, 0.2])
        assert f.max_abs() == pytest.approx(0.04)
        d = f.to_dict()
        assert d["x"] == [0.1, 0.2]

    def test_no_formula_off_table(self):
        with pytest.raises(KeyError):
            CoefficientField("a", None, {0.5: 1.0})(0.3)


class TestDriftStage:
    u_bar = sum_profiles([smooth_step(2.0**-5), holder_wedge(P)])

    def test_delta_window(self):
        delta, diag = find_delta(self.u_bar, K)
        assert delta == 2.0**-8  # pinned pipeline value
        inside = np.abs(diag["x"]) < delta
        assert np.all(diag["L4"][inside] >= (1 + DELTA_MARGIN) * np.abs(diag["L1"][inside]))
        assert diag["min_ratio"] >= 1 + DELTA_MARGIN

    def test_a_vanishes_outside_and_is_admissible_inside(self):
        delta, _ = find_delta(self.u_bar, K)
        a = coefficient_a(self.u_bar, delta, K)
        assert np.all(a(np.array([-0.5, -delta, delta, 0.9])) == 0.0)
        xs = delta * np.array([-0.9, -0.3, -1e-6, 1e-6, 0.4, 0.99])
        assert np.all(np.abs(a(xs)) <= 1 / (1 + DELTA_MARGIN) + 1e-12)

    def test_drift_cancels_diffusion_inside_window(self):
        # a = +L1/L4 makes L1 + a (L2 - L4) collapse to a L2
        delta, _ = find_delta(self.u_bar, K)
        a = coefficient_a(self.u_bar, delta, K)
        xs = delta * np.array([-0.7, -0.01, 0.2, 0.8])
        lhs = drift_values(self.u_bar, a, xs, K)
        rhs = a(xs) * apply_L2(self.u_bar, xs, K).value
        assert np.allclose(lhs, rhs, rtol=1e-10)

    def test_bound_is_finite(self):
        delta, _ = find_delta(self.u_bar, K)
        a = coefficient_a(self.u_bar, delta, K)
        C0 = measure_drift_bound(self.u_bar, a, K)
        assert np.isfinite(C0) and C0 > 0


def test_delta_search_descends_below_the_default_floor():
    # alpha = 0.75: the tail of L1 u_r beats L4 v down to about 2^-48.
    p = ProblemParams(0.75, 1.0, 2.0, 1)
    u = sum_profiles([smooth_step(2.0**-60), holder_wedge(p)])
    delta, diag = find_delta(u, reduction_constants(p))
    assert delta < 2.0**-40
    assert diag["min_ratio"] >= 1 + DELTA_MARGIN


class TestRamp:
    def test_first_admissible_half_width(self):
        Kr, C_w, diag = choose_ramp(100.0, K)
        assert Kr == 4.0
        assert C_w * diag["ramp_margin"] >= 100.0
        assert diag["max_cancellation"] <= 1e-8 * K.C1

    @pytest.mark.parametrize("p", [P, ProblemParams(0.5, 1.0, 2.0, 2), ProblemParams(0.25, 1.0, 4.0, 1)])
    def test_outer_part_beats_lower_bound(self, p):
        k = reduction_constants(p)
        xs = np.linspace(-1, 1, 128)
        l3 = apply_L3(ClampedRamp(8.0, 1.0), xs, k).value
        assert np.all(l3 >= ramp_lower_bound(8.0, k))

    def test_margin_grows_with_half_width(self):
        m4, _, _ = ramp_margin(4.0, K)
        m16, _, _ = ramp_margin(16.0, K)
        assert m16 > m4 > 0.5


class TestOuterCoefficient:
    def test_root_and_admissibility(self, small_run):
        ce = small_run
        xs = ce.verification_grid()[::7]
        assert np.all(np.abs(ce.c(xs)) <= 1)
        L = apply_L(ce.u_raw, ce.a, ce.c, xs, ce.consts)
        scale = np.abs(L.parts["L1"]) + np.abs(L.parts["L3"])
        assert np.all(np.abs(L.value) <= 1e-12 * scale + 10 * L.error_estimate)

    def test_too_small_ramp_breaks_admissibility(self, small_run):
        ce = small_run
        u = sum_profiles([ce.u_bar, ClampedRamp(4.0, 1e-3)])
        c = coefficient_c(u, ce.a, ce.consts)
        with pytest.raises(ConstructionError) as exc:
            c(np.linspace(-0.9, 0.9, 16))
        assert exc.value.stage == "coefficient_c"


def test_requested_bound_below_realised_fails():
    with pytest.raises(ConstructionError) as exc:
        build_for_r(ProblemParams(0.5, 1.0, 2.0, 1, C0=1.0), 2.0**-5)
    assert exc.value.stage == "drift_bound"


def test_normalisation(small_run):
    u = small_run.u
    assert max(abs(u.limit_neg), abs(u.limit_pos)) == pytest.approx(1.0, rel=1e-15)
    assert u.monotone


class TestCanonical:
    """Regression values of the reference run, pinned after the first verified build."""

    def test_pinned_values(self, canonical):
        ce = canonical
        assert ce.r == 2.0**-149
        assert ce.delta == 2.0**-23
        assert ce.K_ramp == 4.0
        assert ce.C0 == pytest.approx(19444.920579066264, rel=1e-6)
        assert ce.C_w == pytest.approx(7011.065681752395, rel=1e-6)
        assert ce.margins["normalized_gap"] == pytest.approx(7.131026786239594e-05, rel=1e-6)
        assert ce.margins["a_margin"] > 1e-3 and ce.margins["c_margin"] > 1e-3
        assert len(ce.history) == 3

    def test_breaks_modulus(self, canonical):
        m = canonical.margins
        assert m["normalized_gap"] > m["eta_2r"]

    def test_json_round_trip(self, canonical):
        d = json.loads(json.dumps(canonical.to_dict()))
        back = Counterexample.from_dict(d)
        xs = canonical.verification_grid()
        assert np.array_equal(back.a(xs), canonical.a(xs))
        assert np.array_equal(back.c(xs), canonical.c(xs))
        assert back.u.eval(0.3) == canonical.u.eval(0.3)
        assert back.to_dict() == d


def test_bound_settles_once_r_is_far_below_the_drift_window():
    # For r in {2^-5, 2^-8, 2^-11} the measured bound still grows like r^(-1/2);
    # it becomes independent of r only once r is far below 2^-23.
    bounds = [build_for_r(P, r).C0 for r in (2.0**-30, 2.0**-40, 2.0**-50)]
    assert max(bounds) / min(bounds) - 1.0 <= 0.2
