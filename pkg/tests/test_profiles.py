import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nonsymkernel.params import ProblemParams
from nonsymkernel.profiles import (ClampedRamp, Constant, HolderWedge, Modulus, ScaledProfile,
                                   SmoothStep, UnitRamp, clamped_ramp, holder_wedge,
                                   profile_from_dict, smooth_step, sum_profiles)

P = ProblemParams(0.5, 1.0, 2.0)

profiles = st.sampled_from([
    smooth_step(0.25), smooth_step(2.0**-20), holder_wedge(P), clamped_ramp(4.0, 3.0), UnitRamp(),
    sum_profiles([smooth_step(0.1), holder_wedge(P), clamped_ramp(8.0, 2.0)]),
    ScaledProfile(holder_wedge(P), 0.5), Constant(0.3),
])
points = st.floats(-10.0, 10.0, allow_nan=False)


def test_step_examples():
    u = smooth_step(0.125)
    assert u.eval(0.0) == 0.0
    assert u.eval(0.0625) == pytest.approx(203.0 / 256.0, abs=1e-15)
    assert u.eval(0.2) == 1.0 and u.eval(-0.2) == -1.0
    assert u.deriv(0.0) == pytest.approx(15.0 / 8.0 / 0.125)
    assert u.deriv(0.125) == 0.0


def test_wedge_examples():
    v = holder_wedge(P)
    assert v.beta == 0.25
    assert v.eval(1.0) == 1.0 and v.eval(5.0) == pytest.approx(2.0**0.25)
    assert v.eval(0.0) == 0.0
    assert math.isnan(v.deriv(0.0)) and math.isnan(v.deriv(2.0))
    assert v.deriv(0.5) == pytest.approx(0.25 * 0.5**-0.75)


def test_ramp_examples():
    w = clamped_ramp(4.0, 2.0)
    assert w.eval(3.0) == 6.0 and w.eval(9.0) == 8.0
    assert (w.limit_neg, w.limit_pos) == (-8.0, 8.0)
    with pytest.raises(ValueError):
        ClampedRamp(2.0, 1.0)
    assert UnitRamp().eval(0.5) == 0.5 and UnitRamp().eval(3.0) == 1.0


@pytest.mark.parametrize("bad", [lambda: SmoothStep(0.0), lambda: HolderWedge(1.0),
                                 lambda: HolderWedge(0.0), lambda: sum_profiles([])])
def test_invalid_profiles(bad):
    with pytest.raises(ValueError):
        bad()


def test_sum_collects_breakpoints_and_limits():
    u = sum_profiles([smooth_step(0.5), holder_wedge(P)]) + clamped_ramp(4.0)
    assert len(u.parts) == 3
    assert u.breakpoints == (-4.0, -2.0, -0.5, 0.0, 0.5, 2.0, 4.0)
    assert u.kinks == (-4.0, -2.0, 0.0, 2.0, 4.0)
    assert u.limit_pos == pytest.approx(1.0 + 2.0**0.25 + 4.0)
    assert u.monotone


@settings(max_examples=200, deadline=None)
@given(profiles, points, points)
def test_monotone_profiles_are_nondecreasing(u, x, y):
    assume(u.monotone)
    lo, hi = min(x, y), max(x, y)
    assert u.eval(lo) <= u.eval(hi)


@settings(max_examples=200, deadline=None)
@given(profiles, points)
def test_values_stay_between_limits(u, x):
    lo, hi = sorted((u.limit_neg, u.limit_pos))
    assert lo - 1e-12 <= u.eval(x) <= hi + 1e-12


@settings(max_examples=200, deadline=None)
@given(profiles, points)
def test_scalar_path_matches_vector_path(u, x):
    assert u.scalar()(x) == pytest.approx(float(u.eval(x)), rel=1e-13, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(profiles, st.floats(-3.0, 3.0), st.floats(0.0, 6.0))
def test_second_difference_matches_definition(u, x, t):
    direct = u.eval(x + t) + u.eval(x - t) - 2.0 * u.eval(x)
    assert float(u.second_difference(x, t)) == pytest.approx(float(direct), abs=1e-11 * (1 + abs(u.limit_pos)))


def test_ramp_second_difference_is_exactly_zero_inside_the_linear_zone():
    w = clamped_ramp(4.0, 7011.0)
    x = np.array([1e-12, -3e-7, 0.5])
    assert np.all(w.second_difference(x, 1e-15) == 0.0)
    assert np.all(w.second_difference(x, 2.9) == 0.0)


@settings(max_examples=150, deadline=None)
@given(profiles, st.floats(-6.0, 6.0))
def test_derivative_matches_central_difference(u, x):
    # stay clear of every breakpoint
    assume(all(abs(x - b) > 1e-3 for b in u.breakpoints))
    h = 1e-6
    fd = (u.eval(x + h) - u.eval(x - h)) / (2 * h)
    assert float(u.deriv(x)) == pytest.approx(float(fd), rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("u", [smooth_step(0.3), holder_wedge(P), clamped_ramp(8.0, 2.5), UnitRamp(),
                               Constant(1.5), ScaledProfile(smooth_step(1.0), -2.0),
                               sum_profiles([smooth_step(0.1), holder_wedge(P)])])
def test_dict_round_trip(u):
    back = profile_from_dict(u.to_dict())
    xs = np.linspace(-5, 5, 101)
    assert np.array_equal(back.eval(xs), u.eval(xs))
    assert back.to_dict() == u.to_dict()


def test_unknown_profile_kind():
    with pytest.raises(ValueError):
        profile_from_dict({"kind": "spline"})


def test_negative_scale_is_not_monotone():
    assert not ScaledProfile(smooth_step(1.0), -1.0).monotone


class TestModulus:
    def test_power(self):
        eta = Modulus.power(1.0, 0.1)
        assert eta(2.0**-10) == pytest.approx(0.5)
        assert eta(0.0) == 0.0

    def test_log_is_capped_and_monotone(self):
        eta = Modulus.log(2.0)
        s = np.logspace(-30, 1, 200)
        assert np.all(np.diff(eta(s)) >= 0)
        assert eta(1.0) == 2.0 and eta(0.0) == 0.0
        assert eta(math.exp(-4)) == pytest.approx(0.5)

    def test_table_interpolates_and_prepends_origin(self, tmp_path):
        eta = Modulus.table([0.1, 1.0], [0.2, 0.5])
        assert eta.s[0] == 0.0
        assert eta(0.05) == pytest.approx(0.1)
        path = tmp_path / "eta.csv"
        path.write_text("0.1,0.2\n1.0,0.5\n")
        assert Modulus.parse(f"table:{path}") == eta

    @pytest.mark.parametrize("spec, kind", [("power:1:0.1", "power"), ("log:3", "log")])
    def test_parse(self, spec, kind):
        eta = Modulus.parse(spec)
        assert eta.kind == kind
        assert Modulus.from_dict(eta.to_dict()) == eta

    @pytest.mark.parametrize("bad", [
        lambda: Modulus("spline"), lambda: Modulus.power(0.0, 1.0), lambda: Modulus.power(1.0, 0.0),
        lambda: Modulus.table([0.0, 1.0], [0.0, 0.0]), lambda: Modulus.table([1.0, 0.5], [0.1, 0.2]),
        lambda: Modulus.table([0.1, 1.0], [0.5, 0.2]), lambda: Modulus.table([0.0], [0.3]),
        lambda: Modulus.parse("cubic:1"),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            bad()

    def test_negative_argument(self):
        with pytest.raises(ValueError):
            Modulus.power(1.0, 0.5)(-1e-3)


@pytest.mark.parametrize("u, x, curv", [
    (smooth_step(0.5), 0.2, (-60 * 0.4 + 60 * 0.4**3) / 8.0 / 0.25),
    (holder_wedge(P), 0.3, 0.25 * (0.25 - 1.0) * 0.3**-1.75),
])
def test_small_step_second_difference_keeps_relative_accuracy(u, x, curv):
    # phi(x+t) + phi(x-t) - 2 phi(x) = phi''(x) t^2 + O(t^4), with no roundoff floor
    for t in (1e-4, 1e-7, 1e-10):
        assert float(u.second_difference(x, t)) == pytest.approx(curv * t * t, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(0.0, 2.5))
def test_step_second_difference_inside_and_across_the_window(s, h):
    u = smooth_step(0.2)
    x, t = 0.2 * s, 0.2 * h
    direct = u.eval(x + t) + u.eval(x - t) - 2.0 * u.eval(x)
    assert float(u.second_difference(x, t)) == pytest.approx(float(direct), abs=1e-13)
