"""Independent checks of a built counterexample.

Nothing here reuses operator values produced during construction.  The
residual is recomputed with the direct kernel form (``apply_L_direct``), the
coefficients are read back from their stored tables, and the closed-form
anchors are evaluated on fresh profiles.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .construction import Counterexample
from .operators import apply_L1, apply_L2, apply_L3, apply_L4, apply_L_direct, extremal
from .params import KernelDescriptor, ReductionConstants
from .profiles import UnitRamp, clamped_ramp, smooth_step

log = logging.getLogger(__name__)

__all__ = [
    "VerifyConfig", "CheckResult", "VerificationReport",
    "check_kernel_bounds", "check_residual", "check_modulus_break",
    "check_admissibility", "check_extremal_signs", "check_closed_form",
    "check_cancellation", "check_scaling", "verify", "emit_report",
]


@dataclass(frozen=True)
class VerifyConfig:
    """Every tolerance used by the verifier.

    ``residual_rel`` sets ``tol_residual = residual_rel * (C0 + 1)`` unless
    ``tol_residual`` is given explicitly; the extremal check reuses it.
    """

    residual_rel: float = 1e-3
    tol_residual: float | None = None
    admissibility_margin: float = 1e-3
    closed_form_rel: float = 1e-6
    cancellation_rel: float = 1e-8
    scaling_rel: float = 1e-6
    scaling_r: tuple = (0.5, 0.125)
    t_min: float = 1e-6
    t_max: float = 1e3
    t_per_decade: int = 20
    cancellation_K: tuple = (4.0, 16.0)

    def residual_tol(self, C0: float) -> float:
        return self.tol_residual if self.tol_residual is not None else self.residual_rel * (C0 + 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scaling_r"] = list(self.scaling_r)
        d["cancellation_K"] = list(self.cancellation_K)
        return d


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "tolerance": float(self.tolerance), "details": _plain(self.details)}


@dataclass
class VerificationReport:
    kernel_bounds: CheckResult
    residual: CheckResult
    modulus_break: CheckResult
    admissibility: CheckResult
    extremal_signs: CheckResult
    scaling_checks: CheckResult
    closed_form_checks: CheckResult
    cancellation_checks: CheckResult
    tolerances: dict
    table: dict

    CHECKS = ("kernel_bounds", "residual", "modulus_break", "admissibility", "extremal_signs",
              "scaling_checks", "closed_form_checks", "cancellation_checks")

    @property
    def checks(self) -> list[CheckResult]:
        return [getattr(self, k) for k in self.CHECKS]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        out = {k: getattr(self, k).to_dict() for k in self.CHECKS}
        out.update(passed=self.passed, failures=self.failures, tolerances=self.tolerances)
        return out


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def check_kernel_bounds(ce: Counterexample, xs=None, vcfg: VerifyConfig = VerifyConfig()) -> CheckResult:
    """Slack of ``lam <= K |y|^(n+alpha) <= Lam`` over ``x`` and a log grid of ``|y|``, both signs."""
    xs = ce.verification_grid() if xs is None else np.asarray(xs, dtype=float)
    decades = np.log10(vcfg.t_max / vcfg.t_min)
    rho = np.logspace(np.log10(vcfg.t_min), np.log10(vcfg.t_max), int(decades * vcfg.t_per_decade) + 1)
    rho = np.unique(np.concatenate([rho, [1.0 - 1e-12, 1.0]]))
    kd = KernelDescriptor(ce.params)
    av, cv = ce.a(xs), ce.c(xs)
    worst, where = np.inf, None
    for sign in (1.0, -1.0):
        s = kd.slack(rho[None, :], sign, av[:, None], cv[:, None])
        i, j = np.unravel_index(np.argmin(s), s.shape)
        if s[i, j] < worst:
            worst, where = float(s[i, j]), (float(xs[i]), float(sign * rho[j]))
    return CheckResult("kernel_bounds", worst > 0, worst, 0.0,
                       {"worst_x1": where[0], "worst_t": where[1], "n_x": xs.size, "n_t": 2 * rho.size})


def check_residual(ce: Counterexample, xs=None, vcfg: VerifyConfig = VerifyConfig()) -> tuple[CheckResult, np.ndarray]:
    """``max |L u|`` on the unscaled profile from the direct kernel form."""
    xs = ce.verification_grid() if xs is None else np.asarray(xs, dtype=float)
    tol = vcfg.residual_tol(ce.C0)
    res = apply_L_direct(ce.u_raw, ce.a, ce.c, xs, ce.consts)
    vals = np.asarray(res.value)
    i = int(np.argmax(np.abs(vals)))
    worst = float(abs(vals[i]))
    return CheckResult("residual", worst <= tol, worst, tol,
                       {"worst_x1": float(xs[i]), "max_error_estimate": float(np.max(res.error_estimate)),
                        "n_points": xs.size}), vals


def check_modulus_break(ce: Counterexample) -> CheckResult:
    """Witness pair ``(r, -r)`` on the normalised profile: ``u(r) - u(-r) > eta(2r)``."""
    x, xp = ce.r, -ce.r
    gap = float(ce.u.eval(x) - ce.u.eval(xp))
    target = float(ce.eta(abs(x - xp)))
    sup = float(max(abs(ce.u.limit_pos), abs(ce.u.limit_neg)))
    return CheckResult("modulus_break", gap > target and sup <= 1.0 + 1e-12, gap - target, 0.0,
                       {"x": x, "x_prime": xp, "gap": gap, "eta": target, "sup_abs_u": sup})


def check_admissibility(ce: Counterexample, xs=None, vcfg: VerifyConfig = VerifyConfig()) -> CheckResult:
    xs = ce.verification_grid() if xs is None else np.asarray(xs, dtype=float)
    ma = 1.0 - float(np.max(np.abs(ce.a(xs))))
    mc = 1.0 - float(np.max(np.abs(ce.c(xs))))
    m = min(ma, mc)
    return CheckResult("admissibility", m >= vcfg.admissibility_margin, m, vcfg.admissibility_margin,
                       {"a_margin": ma, "c_margin": mc})


def check_extremal_signs(ce: Counterexample, xs=None, vcfg: VerifyConfig = VerifyConfig()) -> tuple[CheckResult, np.ndarray, np.ndarray]:
    """``M+ u >= -tol`` and ``M- u <= tol`` pointwise away from the singular line."""
    xs = ce.verification_grid() if xs is None else np.asarray(xs, dtype=float)
    tol = vcfg.residual_tol(ce.C0)
    mp = np.asarray(extremal(ce.u_raw, xs, ce.consts, +1, ce.cfg).value)
    mm = np.asarray(extremal(ce.u_raw, xs, ce.consts, -1, ce.cfg).value)
    lo, hi = float(mp.min()), float(mm.max())
    worst = min(lo, -hi)
    return CheckResult("extremal_signs", lo >= -tol and hi <= tol, worst, tol,
                       {"min_M_plus": lo, "max_M_minus": hi,
                        "x1_min_M_plus": float(xs[np.argmin(mp)]),
                        "x1_max_M_minus": float(xs[np.argmax(mm)])}), mp, mm


def unit_ramp_L1_exact(x, consts: ReductionConstants):
    """``L1 w_1`` in closed form: ``c0 / (alpha (1-alpha)) (|x-1|^(1-alpha) - |x+1|^(1-alpha))``."""
    a = consts.alpha
    x = np.asarray(x, dtype=float)
    return consts.c0 / (a * (1.0 - a)) * (np.abs(x - 1.0) ** (1.0 - a) - np.abs(x + 1.0) ** (1.0 - a))


def check_closed_form(consts: ReductionConstants, vcfg: VerifyConfig = VerifyConfig(), n_points: int = 64) -> CheckResult:
    xs = np.linspace(-1.0, 1.0, n_points + 2)[1:-1]
    got = np.asarray(apply_L1(UnitRamp(), xs, consts).value)
    want = unit_ramp_L1_exact(xs, consts)
    rel = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
    worst = float(rel.max())
    return CheckResult("closed_form_checks", worst <= vcfg.closed_form_rel, worst, vcfg.closed_form_rel,
                       {"n_points": n_points, "worst_x1": float(xs[np.argmax(rel)])})


def check_cancellation(consts: ReductionConstants, vcfg: VerifyConfig = VerifyConfig(), n_points: int = 128) -> CheckResult:
    """``L2 w_K = L4 w_K`` on ``|x| <= 1`` (the ramp is linear on ``[x-1, x+1]``)."""
    xs = np.linspace(-1.0, 1.0, n_points)
    tol = vcfg.cancellation_rel * consts.C1
    worst, per_K = 0.0, {}
    for K in vcfg.cancellation_K:
        wk = clamped_ramp(K)
        d = np.abs(np.asarray(apply_L2(wk, xs, consts).value) - apply_L4(wk, xs, consts))
        per_K[str(K)] = float(d.max())
        worst = max(worst, float(d.max()))
    return CheckResult("cancellation_checks", worst <= tol, worst, tol, {"per_K": per_K})


def check_scaling(consts: ReductionConstants, vcfg: VerifyConfig = VerifyConfig(), n_points: int = 32) -> CheckResult:
    """``L1 u_r(x) = r^(-alpha) L1 u_1(x / r)``."""
    a = consts.alpha
    xs = np.linspace(-0.95, 0.95, n_points)
    u1 = smooth_step(1.0)
    worst, per_r = 0.0, {}
    for r in vcfg.scaling_r:
        lhs = np.asarray(apply_L1(smooth_step(r), xs, consts).value)
        rhs = r ** (-a) * np.asarray(apply_L1(u1, xs / r, consts).value)
        err = float(np.max(np.abs(lhs - rhs)) / max(1.0, r ** (-a)))
        per_r[str(r)] = err
        worst = max(worst, err)
    return CheckResult("scaling_checks", worst <= vcfg.scaling_rel, worst, vcfg.scaling_rel, {"per_r": per_r})


def emit_report(checks: dict[str, CheckResult], tolerances: dict, table: dict) -> VerificationReport:
    """Aggregate; the report passes iff every check passes."""
    rep = VerificationReport(tolerances=tolerances, table=table, **checks)
    for c in rep.checks:
        log.info("%-20s %s value=%.6g tol=%.6g", c.name, "pass" if c.passed else "FAIL", c.value, c.tolerance)
    return rep


def verify(ce: Counterexample, vcfg: VerifyConfig = VerifyConfig(), xs=None) -> VerificationReport:
    """Run every check on ``ce`` and return the report with its per-point table."""
    xs = ce.verification_grid() if xs is None else np.asarray(xs, dtype=float)
    consts = ce.consts
    residual, l_direct = check_residual(ce, xs, vcfg)
    ext, mp, mm = check_extremal_signs(ce, xs, vcfg)
    checks = {
        "kernel_bounds": check_kernel_bounds(ce, xs, vcfg),
        "residual": residual,
        "modulus_break": check_modulus_break(ce),
        "admissibility": check_admissibility(ce, xs, vcfg),
        "extremal_signs": ext,
        "scaling_checks": check_scaling(consts, vcfg),
        "closed_form_checks": check_closed_form(consts, vcfg),
        "cancellation_checks": check_cancellation(consts, vcfg),
    }
    u = ce.u_raw
    table = {
        "x1": xs,
        "L1": np.asarray(apply_L1(u, xs, consts, ce.cfg).value),
        "L2": np.asarray(apply_L2(u, xs, consts, ce.cfg).value),
        "L3": np.asarray(apply_L3(u, xs, consts, ce.cfg).value),
        "L4": np.asarray(apply_L4(u, xs, consts)),
        "a": np.asarray(ce.a(xs)),
        "c": np.asarray(ce.c(xs)),
        "L_direct": l_direct,
        "M_plus": mp,
        "M_minus": mm,
    }
    tolerances = {**vcfg.to_dict(), "tol_residual_effective": vcfg.residual_tol(ce.C0),
                  "kernel_slack_min": 0.0}
    return emit_report(checks, tolerances, table)


TABLE_COLUMNS = ("x1", "L1", "L2", "L3", "L4", "a", "c", "L_direct", "M_plus", "M_minus")
