import numpy as np
import pytest

from nonsymkernel.verify import (CheckResult, VerifyConfig, check_admissibility,
                                 check_kernel_bounds, check_modulus_break, check_residual, emit_report,
                                 verify)


@pytest.fixture(scope="module")
def report(canonical):
    return verify(canonical)


def test_canonical_report_passes(report):
    assert report.passed, report.failures
    d = report.to_dict()
    for key in ("kernel_bounds", "residual", "modulus_break", "admissibility", "extremal_signs",
                "scaling_checks", "closed_form_checks", "cancellation_checks", "tolerances"):
        assert key in d
    assert d["tolerances"]["tol_residual_effective"] == pytest.approx(1e-3 * (19444.920579066264 + 1), rel=1e-6)


def test_report_values(report, canonical):
    assert report.kernel_bounds.value > 0
    assert report.residual.value <= 1e-3 * (canonical.C0 + 1)
    assert report.modulus_break.details["gap"] > report.modulus_break.details["eta"]
    assert report.extremal_signs.details["min_M_plus"] >= 0
    assert report.extremal_signs.details["max_M_minus"] <= 0


def test_table_is_complete_and_consistent(report):
    t = report.table
    n = t["x1"].size
    assert all(np.asarray(t[c]).size == n for c in t)
    recombined = t["L1"] + t["a"] * (t["L2"] - t["L4"]) - t["c"] * t["L3"]
    scale = np.abs(t["L1"]) + np.abs(t["L3"])
    assert np.all(np.abs(recombined) <= 1e-9 * scale)
    assert np.all(t["M_minus"] <= t["M_plus"])


def test_boundary_sample_is_checked(report):
    x = report.table["x1"]
    assert x.min() == pytest.approx(-0.999) and x.max() == pytest.approx(0.999)


def test_deterministic(canonical, report):
    again = check_residual(canonical)[0]
    assert again.value == pytest.approx(report.residual.value, rel=1e-12, abs=1e-12)


def test_outer_coefficient_overshoot_is_caught(canonical_copy):
    ce = canonical_copy
    x0 = float(ce.verification_grid()[40])
    ce.c.table[x0] = 1.5
    assert not check_admissibility(ce).passed
    assert not check_kernel_bounds(ce).passed
    res = check_residual(ce)[0]
    assert not res.passed and res.details["worst_x1"] == x0


def test_tightened_residual_tolerance_fails(canonical):
    res = check_residual(canonical, vcfg=VerifyConfig(tol_residual=1e-6))[0]
    assert not res.passed


def test_modulus_break_margin_is_strict(canonical_copy):
    ce = canonical_copy
    w = check_modulus_break(ce)
    assert w.passed and w.details["x"] == ce.r and w.details["x_prime"] == -ce.r
    from nonsymkernel.profiles import Modulus
    ce.eta = Modulus.power(1.0, 0.01)
    assert not check_modulus_break(ce).passed


def test_emit_report_aggregates(report):
    checks = {k: getattr(report, k) for k in report.CHECKS}
    checks["scaling_checks"] = CheckResult("scaling_checks", False, 1.0, 1e-6)
    bad = emit_report(checks, report.tolerances, report.table)
    assert not bad.passed and bad.failures == ["scaling_checks"]
