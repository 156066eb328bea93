"""Problem parameters and the dimension-reduction constants.

All profiles depend on ``x_1`` only, so every n-dimensional kernel integral
collapses to a 1D integral in ``t = y_1`` once the kernel has been integrated
over the cross-section ``{z in R^(n-1)}``.  The weights produced here are
exactly those cross-section integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import special

from .quadrature import QuadConfig, integrate_smooth

__all__ = ["ProblemParams", "ReductionConstants", "KernelDescriptor",
           "reduction_constants", "tail_weight_value"]

_CONST_CFG = QuadConfig(rel_tol=1e-13, abs_tol=1e-15)


@dataclass(frozen=True)
class ProblemParams:
    """Order ``alpha``, ellipticity ``lam <= Lam``, dimension and exponent shift.

    ``C0`` is the bound targeted by the bounded-drift stage; ``None`` means it
    is measured from the realised profile.  ``epsilon`` defaults to
    ``(1 - alpha) / 2``.
    """

    alpha: float
    lam: float
    Lam: float
    dim_n: int = 1
    C0: float | None = None
    epsilon: float | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.lam < self.Lam:
            raise ValueError(f"need 0 < lambda < Lambda, got {self.lam}, {self.Lam}")
        if int(self.dim_n) != self.dim_n or self.dim_n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim_n}")
        if self.C0 is not None and not self.C0 > 0:
            raise ValueError("C0 must be positive")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", 0.5 * (1.0 - self.alpha))
        if not 0.0 < self.epsilon < 1.0 - self.alpha:
            raise ValueError(f"epsilon must lie in (0, 1 - alpha), got {self.epsilon}")

    @property
    def sym(self) -> float:
        """Weight of the even kernel part, ``(lam + Lam) / 2``."""
        return 0.5 * (self.lam + self.Lam)

    @property
    def skew(self) -> float:
        """Weight of the odd kernel parts, ``(Lam - lam) / 2``."""
        return 0.5 * (self.Lam - self.lam)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "lambda": self.lam, "Lambda": self.Lam,
                "n": self.dim_n, "C0": self.C0, "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemParams":
        return cls(alpha=d["alpha"], lam=d["lambda"], Lam=d["Lambda"],
                   dim_n=d.get("n", 1), C0=d.get("C0"), epsilon=d.get("epsilon"))


def unit_ball_volume(k: int) -> float:
    """Volume of the unit ball in R^k by the slice recursion ``V_k = V_{k-1} int (1-t^2)^((k-1)/2)``."""
    vol = 1.0
    for j in range(1, k + 1):
        e = 0.5 * (j - 1)
        vol *= integrate_smooth(lambda t: (1.0 - t * t) ** e, -1.0, 1.0, _CONST_CFG).value
    return vol


@dataclass(frozen=True)
class ReductionConstants:
    params: ProblemParams
    A_cross: float
    omega_n: float
    ball_volume: float  # volume of the unit (n-1)-ball
    c0: float = field(init=False)
    C1: float = field(init=False)

    def __post_init__(self):
        p = self.params
        object.__setattr__(self, "c0", p.sym * self.A_cross)
        object.__setattr__(self, "C1", self.omega_n * (p.Lam - p.lam) / 4.0)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @cached_property
    def sphere_abs_moment(self) -> float:
        """``int_{S^(n-1)} |theta_1| dtheta``, recovered from ``omega_n``."""
        return 0.5 * (self.params.dim_n + 1) * self.omega_n

    @cached_property
    def c_frac(self) -> float:
        """Constant with ``L1 = -c_frac (-Laplacian)^(alpha/2)``."""
        n, a = self.params.dim_n, self.alpha
        c_na = a * 2.0 ** (a - 1.0) * math.gamma(0.5 * (n + a)) / (
            math.pi ** (0.5 * n) * math.gamma(1.0 - 0.5 * a))
        return self.params.sym / c_na

    def ball_weight(self, t):
        """Cross-section volume of B_1 at height ``t`` (zero outside [-1, 1])."""
        t = np.asarray(t, dtype=float)
        inside = np.abs(t) < 1.0
        e = 0.5 * (self.params.dim_n - 1)
        out = np.where(inside, self.ball_volume * np.clip(1.0 - t * t, 0.0, None) ** e, 0.0)
        return out

    def power_weight(self, t):
        """Full cross-section of ``|y|^(-n-alpha)``: ``A_cross |t|^(-1-alpha)``."""
        return self.A_cross * np.abs(np.asarray(t, dtype=float)) ** (-1.0 - self.alpha)

    def tail_weight(self, t):
        """Cross-section of ``|y|^(-n-alpha)`` restricted to ``|y| >= 1``."""
        t = np.abs(np.asarray(t, dtype=float))
        n, a = self.params.dim_n, self.alpha
        with np.errstate(divide="ignore"):
            full = self.A_cross * t ** (-1.0 - a)
        if n == 1:
            return np.where(t >= 1.0, full, 0.0)
        frac = special.betainc(0.5 * (1.0 + a), 0.5 * (n - 1), np.minimum(t * t, 1.0))
        # I_{t^2}(b, a) ~ t^(1+alpha) / (b B(b, a)) as t -> 0 keeps the weight finite.
        near0 = self.A_cross / (0.5 * (1.0 + a) * special.beta(0.5 * (1.0 + a), 0.5 * (n - 1)))
        with np.errstate(invalid="ignore"):
            partial = np.where(t < 1e-100, near0, full * frac)
        return np.where(t >= 1.0, full, partial)

    def inner_weight(self, t):
        """Cross-section of ``|y|^(-n-alpha)`` restricted to ``|y| < 1``."""
        t = np.abs(np.asarray(t, dtype=float))
        n, a = self.params.dim_n, self.alpha
        with np.errstate(divide="ignore"):
            full = self.A_cross * t ** (-1.0 - a)
        if n == 1:
            return np.where(t < 1.0, full, 0.0)
        frac = special.betainc(0.5 * (n - 1), 0.5 * (1.0 + a), np.clip(1.0 - t * t, 0.0, 1.0))
        return np.where(t < 1.0, full * frac, 0.0)

    def scalar_weights(self):
        """Plain-float versions of ``(power, ball, tail, inner)`` weights for ``t > 0``."""
        n, a, A, V = self.params.dim_n, self.alpha, self.A_cross, self.ball_volume
        e, b1, b2 = 0.5 * (n - 1), 0.5 * (1.0 + a), 0.5 * (n - 1)
        betainc = special.betainc

        def power(t):
            return A * t ** (-1.0 - a)

        def ball(t):
            return V * (1.0 - t * t) ** e if t < 1.0 else 0.0

        def tail(t):
            if t >= 1.0:
                return power(t)
            return 0.0 if n == 1 else power(t) * float(betainc(b1, b2, t * t))

        def inner(t):
            if t >= 1.0:
                return 0.0
            return power(t) if n == 1 else power(t) * float(betainc(b2, b1, 1.0 - t * t))

        return power, ball, tail, inner


def reduction_constants(p: ProblemParams) -> ReductionConstants:
    """Compute the cross-section constants for ``p`` by 1D quadrature."""
    n, a = p.dim_n, p.alpha
    ball = unit_ball_volume(n - 1)
    if n == 1:
        A = 1.0
    else:
        # int_{R^(n-1)} (1+|z|^2)^(-(n+a)/2) dz with rho = tan(theta).
        sphere = (n - 1) * ball
        radial = integrate_smooth(
            lambda th: np.sin(th) ** (n - 2) * np.cos(th) ** a, 0.0, 0.5 * np.pi, _CONST_CFG)
        A = sphere * radial.value
    e = 0.5 * (n - 1)
    half = integrate_smooth(lambda t: t * ball * (1.0 - t * t) ** e, 0.0, 1.0, _CONST_CFG)
    omega = 4.0 * half.value  # 2 * int_{B_1} |y_1| dy
    return ReductionConstants(params=p, A_cross=A, omega_n=omega, ball_volume=ball)


def tail_weight_value(consts: ReductionConstants, t: float) -> float:
    if t == 0:
        raise ValueError("tail weight is evaluated at t != 0 only")
    return float(consts.tail_weight(t))


@dataclass(frozen=True)
class KernelDescriptor:
    """Pointwise evaluation of ``K(x, y) = K1 + a K2 - c K3`` at ``|y| = rho``.

    ``sign`` is ``sgn(y_1)``; the three parts only see ``|y|`` and ``sgn(y_1)``.
    """

    params: ProblemParams

    def components(self, rho, sign):
        p = self.params
        rho = np.asarray(rho, dtype=float)
        power = rho ** (-p.dim_n - p.alpha)
        k1 = p.sym * power
        k2 = np.where(rho < 1.0, sign * p.skew, 0.0)
        k3 = np.where(rho >= 1.0, sign * p.skew * power, 0.0)
        return k1, k2, k3

    def value(self, rho, sign, a, c):
        k1, k2, k3 = self.components(rho, sign)
        return k1 + a * k2 - c * k3

    def slack(self, rho, sign, a, c):
        """Smallest normalised gap to the ellipticity bounds (negative means violated)."""
        p = self.params
        scaled = self.value(rho, sign, a, c) * np.asarray(rho, dtype=float) ** (p.dim_n + p.alpha)
        return np.minimum(scaled - p.lam, p.Lam - scaled)
