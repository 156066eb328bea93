"""Constructive assembly of the counterexample ``(u, a, c)``.

Stages, in order:

1. ``choose_r`` picks the step width from the modulus.
2. ``u_bar = u_r + v``; ``find_delta`` locates the window where the drift
   dominates the diffusion, and ``coefficient_a`` cancels ``L1`` against the
   drift there.  The realised bound ``C0`` on ``L1 u_bar + a (L2 - L4) u_bar``
   is measured on the construction grid.
3. ``choose_ramp`` picks the ramp half-width and scale so the outer odd part
   ``L3 w`` beats ``C0 + |L1 w|``.
4. ``coefficient_c`` solves the (linear in ``c``) equation ``L u = 0``.
5. ``normalize`` rescales ``u`` into ``[-1, 1]``; if the rescaled jump no
   longer beats ``eta(2r)``, the pipeline retries with a smaller ``r``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .operators import apply_L1, apply_L2, apply_L3, apply_L4
from .params import ProblemParams, ReductionConstants, reduction_constants
from .profiles import (ClampedRamp, Modulus, Profile, ScaledProfile, clamped_ramp,
                       holder_wedge, profile_from_dict, smooth_step, sum_profiles)
from .quadrature import QuadConfig

log = logging.getLogger(__name__)

__all__ = [
    "ConstructionError", "GridSpec", "CoefficientField", "Counterexample",
    "choose_r", "find_delta", "coefficient_a", "measure_drift_bound",
    "choose_ramp", "coefficient_c", "normalize", "build_for_r",
    "build_counterexample",
]

DELTA_MARGIN = 1e-2
RAMP_TARGET = 0.5
C0_MARGIN = 0.1
CW_MARGIN = 0.05
MIN_DYADIC_EXP = 1000


class ConstructionError(RuntimeError):
    def __init__(self, stage: str, message: str, diagnostics: dict | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grids.

    The linear grid has ``n_linear`` points on ``[-0.999, 0.999]`` minus the
    band ``|x| <= exclusion``.  The inner grid adds ``inner_per_dyad`` log-spaced
    points per dyad on ``[2**-floor_exp, exclusion)`` on both sides, so the
    region between the drift window and the exclusion band is checked too.
    """

    n_linear: int = 128
    exclusion: float = 1e-4
    kink_offset: float = 1e-6
    inner_per_dyad: int = 2
    delta_per_dyad: int = 32
    floor_exp: int = 40
    ramp_points: int = 128

    def linear(self, kinks=()) -> np.ndarray:
        x = np.linspace(-0.999, 0.999, self.n_linear)
        x = x[np.abs(x) > self.exclusion]
        return _avoid(x, kinks, self.kink_offset)

    def inner(self, kinks=()) -> np.ndarray:
        top = np.log2(self.exclusion)
        pos = log_grid(self.inner_per_dyad, self.floor_exp, -top)
        pos = pos[pos < self.exclusion]
        # The inner grid approaches the origin on purpose; only other kinks are avoided.
        far = [k for k in kinks if abs(k) >= self.exclusion]
        return _avoid(np.concatenate([-pos[::-1], pos]), far, self.kink_offset)

    def verification(self, kinks=()) -> np.ndarray:
        return np.unique(np.concatenate([self.linear(kinks), self.inner(kinks)]))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def log_grid(per_dyad: int, floor_exp: int, top_exp: float = 1.0) -> np.ndarray:
    """Points ``2**-(k + j/per_dyad)`` for ``top_exp <= k < floor_exp``, increasing."""
    k = np.arange(np.ceil(top_exp), floor_exp)
    j = np.arange(per_dyad) / per_dyad
    return np.sort((2.0 ** -(k[:, None] + j[None, :])).ravel())


def _avoid(x, kinks, offset):
    x = np.array(x, dtype=float)
    for k in kinks:
        close = np.abs(x - k) < offset
        x[close] = k + np.where(x[close] >= k, offset, -offset)
    return x


class CoefficientField:
    """A coefficient ``x -> a(x)`` memoised on the grids it was built on.

    Off-grid queries fall back to ``formula``; values stored in the table take
    precedence, so a tampered table is what the verifier sees.
    """

    def __init__(self, name: str, formula: Callable | None, table: dict[float, float] | None = None,
                 description: dict | None = None):
        self.name = name
        self.formula = formula
        self.table = dict(table or {})
        self.description = description or {}

    def __call__(self, x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.size)
        missing = []
        for i, xi in enumerate(xs):
            v = self.table.get(float(xi))
            if v is None:
                missing.append(i)
            else:
                out[i] = v
        if missing:
            if self.formula is None:
                raise KeyError(f"{self.name} has no value off its table")
            out[missing] = self.formula(xs[missing])
        return float(out[0]) if np.ndim(x) == 0 else out

    def memoize(self, xs) -> None:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        new = np.array([x for x in xs if float(x) not in self.table])
        if new.size and self.formula is not None:
            for x, v in zip(new, np.atleast_1d(self.formula(new))):
                self.table[float(x)] = float(v)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.table.values()), default=0.0)

    def to_dict(self) -> dict:
        xs = sorted(self.table)
        return {"name": self.name, "description": self.description,
                "x": xs, "value": [self.table[x] for x in xs]}


@dataclass
class Counterexample:
    params: ProblemParams
    eta: Modulus
    r: float
    delta: float
    K_ramp: float
    C_w: float
    C0: float
    u_bar: Profile
    w: Profile
    a: CoefficientField
    c: CoefficientField
    scale: float = 1.0
    margins: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    grid: GridSpec = field(default_factory=GridSpec)
    cfg: QuadConfig = field(default_factory=QuadConfig)

    @property
    def u_raw(self) -> Profile:
        """``u_bar + w`` before rescaling (the scale ``C0`` refers to)."""
        return sum_profiles([self.u_bar, self.w])

    @property
    def u(self) -> Profile:
        return ScaledProfile(self.u_raw, self.scale)

    @property
    def consts(self) -> ReductionConstants:
        return reduction_constants(self.params)

    def verification_grid(self) -> np.ndarray:
        return self.grid.verification(self.u_raw.kinks)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "eta": self.eta.to_dict(),
            "r": self.r, "delta": self.delta, "K_ramp": self.K_ramp,
            "C_w": self.C_w, "C0": self.C0, "scale": self.scale,
            "u_bar": self.u_bar.to_dict(), "w": self.w.to_dict(),
            "a": self.a.to_dict(), "c": self.c.to_dict(),
            "margins": self.margins, "history": self.history,
            "grid": self.grid.to_dict(),
            "quadrature": {"rel_tol": self.cfg.rel_tol, "abs_tol": self.cfg.abs_tol,
                           "max_panels": self.cfg.max_panels,
                           "singularity_split": self.cfg.singularity_split},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Counterexample":
        p = ProblemParams.from_dict(d["params"])
        consts = reduction_constants(p)
        cfg = QuadConfig(**d.get("quadrature", {}))
        u_bar = profile_from_dict(d["u_bar"])
        w = profile_from_dict(d["w"])
        a = coefficient_a(u_bar, d["delta"], consts, cfg)
        a.table = {float(x): float(v) for x, v in zip(d["a"]["x"], d["a"]["value"])}
        c = coefficient_c(sum_profiles([u_bar, w]), a, consts, cfg, check=False)
        c.table = {float(x): float(v) for x, v in zip(d["c"]["x"], d["c"]["value"])}
        return cls(params=p, eta=Modulus.from_dict(d["eta"]), r=d["r"], delta=d["delta"],
                   K_ramp=d["K_ramp"], C_w=d["C_w"], C0=d["C0"], u_bar=u_bar, w=w,
                   a=a, c=c, scale=d["scale"], margins=d.get("margins", {}),
                   history=d.get("history", []), grid=GridSpec(**d.get("grid", {})), cfg=cfg)


def choose_r(eta: Modulus, safety: float = 0.5) -> float:
    """Largest dyadic ``r <= 1/4`` with ``eta(2 r) <= safety``."""
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    for k in range(2, MIN_DYADIC_EXP + 1):
        r = 2.0**-k
        # Relative slack absorbs the last-ulp error of pow() at exact dyadics.
        if eta(2.0 * r) <= safety * (1.0 + 1e-12):
            return r
    raise ConstructionError("choose_r", f"modulus too flat: eta(2r) > {safety} for all r >= 2^-{MIN_DYADIC_EXP}")


def find_delta(u_bar: Profile, consts: ReductionConstants, cfg: QuadConfig = QuadConfig(),
               grid: GridSpec = GridSpec()) -> tuple[float, dict]:
    """Largest dyadic ``delta`` with ``L4 u_bar >= (1 + margin) |L1 u_bar|`` on ``0 < |x| < delta``.

    Checked on ``grid.delta_per_dyad`` log points per dyad down to
    ``2**-grid.floor_exp``, on both sides of the origin.  When no dyadic passes
    there, the search is repeated once, reaching 8 dyads below the narrowest
    breakpoint of ``u_bar``.  Returns ``delta`` and a diagnostics record holding
    the sampled values.
    """
    try:
        return _find_delta(u_bar, consts, cfg, grid.delta_per_dyad, grid.floor_exp)
    except ConstructionError:
        finest = min((b for b in u_bar.breakpoints if b > 0), default=1.0)
        deeper = max(grid.floor_exp, int(np.ceil(-np.log2(finest))) + 8)
        if deeper == grid.floor_exp:
            raise
        return _find_delta(u_bar, consts, cfg, grid.delta_per_dyad, deeper)


def _find_delta(u_bar, consts, cfg, per_dyad, floor_exp):
    pos = log_grid(per_dyad, floor_exp)
    xs = np.concatenate([-pos[::-1], pos])
    l1 = apply_L1(u_bar, xs, consts, cfg).value
    l4 = apply_L4(u_bar, xs, consts)
    ok = l4 >= (1.0 + DELTA_MARGIN) * np.abs(l1)
    first_bad = np.min(np.abs(xs[~ok])) if (~ok).any() else np.inf
    cands = 2.0 ** -np.arange(1, floor_exp + 1)
    passing = cands[cands <= first_bad]
    diag = {"x": xs, "L1": l1, "L4": l4}
    if passing.size == 0 or passing.max() <= pos.min():
        raise ConstructionError("find_delta", "delta search failed", diag)
    delta = float(passing.max())
    inside = np.abs(xs) < delta
    diag["min_ratio"] = float(np.min(l4[inside] / np.maximum(np.abs(l1[inside]), 1e-300)))
    return delta, diag


def coefficient_a(u_bar: Profile, delta: float, consts: ReductionConstants,
                  cfg: QuadConfig = QuadConfig()) -> CoefficientField:
    """``a = L1 u_bar / L4 u_bar`` on ``|x| < delta`` and 0 elsewhere."""

    def formula(xs):
        xs = np.atleast_1d(xs)
        out = np.zeros(xs.size)
        inside = np.abs(xs) < delta
        if inside.any():
            xi = xs[inside]
            l4 = apply_L4(u_bar, xi, consts)
            if np.any(l4 <= 0):
                raise ConstructionError("coefficient_a", "drift vanishes inside the window")
            out[inside] = apply_L1(u_bar, xi, consts, cfg).value / l4
        return out

    return CoefficientField("a", formula, description={
        "formula": "L1 u_bar / L4 u_bar on |x|<delta, 0 elsewhere", "delta": delta})


def drift_values(u_bar: Profile, a: CoefficientField, xs, consts: ReductionConstants,
                 cfg: QuadConfig = QuadConfig()) -> np.ndarray:
    """``L1 u_bar + a (L2 u_bar - L4 u_bar)`` at ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    out = apply_L1(u_bar, xs, consts, cfg).value
    av = a(xs)
    act = av != 0
    if act.any():
        l2 = apply_L2(u_bar, xs[act], consts, cfg).value
        l4 = apply_L4(u_bar, xs[act], consts)
        out[act] += av[act] * (l2 - l4)
    return out


def measure_drift_bound(u_bar: Profile, a: CoefficientField, consts: ReductionConstants,
                        cfg: QuadConfig = QuadConfig(), grid: GridSpec = GridSpec()) -> float:
    """Max of ``|L1 u_bar + a (L2 - L4) u_bar|`` over the linear grid and the delta grid."""
    pos = log_grid(grid.delta_per_dyad, grid.floor_exp)
    xs = np.concatenate([grid.linear(u_bar.kinks), -pos, pos])
    a.memoize(xs[np.abs(xs) < a.description.get("delta", 0.0)])
    return float(np.max(np.abs(drift_values(u_bar, a, xs, consts, cfg))))


def ramp_margin(K_ramp: float, consts: ReductionConstants, cfg: QuadConfig = QuadConfig(),
                n: int = 128) -> tuple[float, np.ndarray, np.ndarray]:
    """``min_{|x|<=1} (L3 w_K - |L1 w_K|)`` for the unit-slope ramp, with the sampled values."""
    xs = np.linspace(-1.0, 1.0, n)
    wk = clamped_ramp(K_ramp)
    l3 = apply_L3(wk, xs, consts, cfg).value
    l1 = apply_L1(wk, xs, consts, cfg).value
    return float(np.min(l3 - np.abs(l1))), l1, l3


def ramp_lower_bound(K_ramp: float, consts: ReductionConstants) -> float:
    """``skew * int_{S^(n-1)} |theta_1| * ((K-1)^(1-alpha) - 1) / (1 - alpha)``."""
    a = consts.alpha
    return consts.params.skew * consts.sphere_abs_moment * ((K_ramp - 1.0) ** (1.0 - a) - 1.0) / (1.0 - a)


def choose_ramp(C0: float, consts: ReductionConstants, cfg: QuadConfig = QuadConfig(),
                grid: GridSpec = GridSpec()) -> tuple[float, float, dict]:
    """Smallest ``K`` in ``4, 8, 16, ...`` with ramp margin ``>= 1/2``; scale ``C_w`` from ``C0``."""
    xs = np.linspace(-1.0, 1.0, grid.ramp_points)
    K = 4.0
    while K <= 2.0**30:
        m, l1, l3 = ramp_margin(K, consts, cfg, grid.ramp_points)
        if m >= RAMP_TARGET:
            wk = clamped_ramp(K)
            cancel = apply_L2(wk, xs, consts, cfg).value - apply_L4(wk, xs, consts)
            C_w = (1.0 + CW_MARGIN) * C0 / m
            return K, C_w, {"ramp_margin": m, "max_cancellation": float(np.max(np.abs(cancel))),
                            "max_abs_L1w": float(np.max(np.abs(l1))), "min_L3w": float(np.min(l3))}
        K *= 2.0
    raise ConstructionError("choose_ramp", "ramp search failed up to K = 2^30")


def coefficient_c(u: Profile, a: CoefficientField, consts: ReductionConstants,
                  cfg: QuadConfig = QuadConfig(), check: bool = True) -> CoefficientField:
    """Root in ``c`` of ``L1 u + a (L2 u - L4 u) - c L3 u = 0``."""

    def formula(xs):
        xs = np.atleast_1d(xs)
        l1 = apply_L1(u, xs, consts, cfg).value
        l2 = apply_L2(u, xs, consts, cfg).value
        l3 = apply_L3(u, xs, consts, cfg).value
        l4 = apply_L4(u, xs, consts)
        num = l1 + a(xs) * (l2 - l4)
        if check and np.any(l3 <= 0):
            raise ConstructionError("coefficient_c", "outer odd part L3 u is not positive")
        c = np.where(num == 0, 0.0, num / np.where(l3 > 0, l3, 1.0))
        if check and np.any(np.abs(c) > 1):
            i = int(np.argmax(np.abs(c)))
            raise ConstructionError("coefficient_c", "admissibility violated: |c| > 1",
                                    {"x": float(xs[i]), "c": float(c[i])})
        return c

    return CoefficientField("c", formula, description={
        "formula": "(L1 u + a (L2 u - L4 u)) / L3 u"})


def build_for_r(p: ProblemParams, r: float, eta: Modulus | None = None,
                cfg: QuadConfig = QuadConfig(), grid: GridSpec = GridSpec()) -> Counterexample:
    """Run every stage for a fixed step width ``r`` (no rescaling)."""
    consts = reduction_constants(p)
    u_bar = sum_profiles([smooth_step(r), holder_wedge(p)])
    delta, ddiag = find_delta(u_bar, consts, cfg, grid)
    # Every later grid must resolve the edge of the drift window.
    grid = replace(grid, floor_exp=max(grid.floor_exp, int(-np.log2(delta)) + 8))
    a = coefficient_a(u_bar, delta, consts, cfg)
    measured = measure_drift_bound(u_bar, a, consts, cfg, grid)
    if p.C0 is not None:
        if p.C0 < measured:
            raise ConstructionError("drift_bound", f"requested C0={p.C0} is below the realised bound {measured}")
        C0 = p.C0
    else:
        C0 = (1.0 + C0_MARGIN) * measured
    K, C_w, rdiag = choose_ramp(C0, consts, cfg, grid)
    w = ClampedRamp(K=K, scale=C_w)
    u = sum_profiles([u_bar, w])
    c = coefficient_c(u, a, consts, cfg)
    xs = grid.verification(u.kinks)
    a.memoize(xs)
    c.memoize(xs)
    margins = {
        "delta_min_ratio": ddiag["min_ratio"],
        "drift_bound_measured": measured,
        "a_margin": 1.0 - a.max_abs(),
        "c_margin": 1.0 - c.max_abs(),
        **rdiag,
    }
    log.info("r=%g delta=%g C0=%g K=%g C_w=%g", r, delta, C0, K, C_w)
    return Counterexample(params=p, eta=eta or Modulus.power(1.0, 1.0), r=r, delta=delta,
                          K_ramp=K, C_w=C_w, C0=C0, u_bar=u_bar, w=w, a=a, c=c,
                          margins=margins, grid=grid, cfg=cfg)


def sup_abs(u: Profile) -> float:
    """``sup |u|`` for a monotone profile, read off its limits."""
    if not u.monotone:
        raise ValueError("sup read-off requires a monotone profile")
    return max(abs(u.limit_pos), abs(u.limit_neg))


def normalize(ce: Counterexample) -> Counterexample:
    """Rescale ``u`` into ``[-1, 1]``; ``L`` is linear so ``L u = 0`` survives."""
    ce.scale = 1.0 / sup_abs(ce.u_raw)
    gap = float(ce.u.eval(ce.r) - ce.u.eval(-ce.r))
    ce.margins["normalized_gap"] = gap
    ce.margins["eta_2r"] = float(ce.eta(2.0 * ce.r))
    return ce


def build_counterexample(p: ProblemParams, eta: Modulus, cfg: QuadConfig = QuadConfig(),
                         grid: GridSpec = GridSpec(), safety: float = 0.5,
                         max_rounds: int = 8) -> Counterexample:
    """Full pipeline; shrinks ``r`` until the rescaled jump at ``+-r`` beats ``eta(2r)``."""
    history = []
    for _ in range(max_rounds):
        r = choose_r(eta, safety)
        ce = normalize(build_for_r(p, r, eta, cfg, grid))
        gap, target = ce.margins["normalized_gap"], ce.margins["eta_2r"]
        history.append({"safety": safety, "r": r, "C0": ce.C0, "normalized_gap": gap, "eta_2r": target})
        if gap > target:
            ce.history = history
            return ce
        # The rescaled jump is nearly independent of r once r is small.
        safety = min(0.5 * gap, 0.5 * safety)
    raise ConstructionError("normalize", "rescaled jump never exceeded eta(2r)", {"history": history})
