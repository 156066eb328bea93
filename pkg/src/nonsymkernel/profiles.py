"""Closed-form one-dimensional profiles and moduli of continuity.

A profile is a bounded function of ``x_1`` that is constant outside
``[-support_radius, support_radius]``.  Breakpoints are exposed so the
quadrature can split panels exactly where smoothness degrades; ``kinks`` is the
subset where the derivative does not exist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Profile", "SmoothStep", "HolderWedge", "ClampedRamp", "Constant",
    "SumProfile", "ScaledProfile", "UnitRamp", "smooth_step", "holder_wedge",
    "clamped_ramp", "sum_profiles", "profile_from_dict",
    "Modulus", "modulus_eval",
]


class Profile:
    breakpoints: tuple[float, ...] = ()
    kinks: tuple[float, ...] = ()
    limit_neg: float = 0.0
    limit_pos: float = 0.0
    support_radius: float = 0.0
    monotone: bool = True

    def eval(self, x):
        raise NotImplementedError

    def deriv(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x)

    def second_difference(self, x, t):
        """``phi(x+t) + phi(x-t) - 2 phi(x)``."""
        return self.eval(x + t) + self.eval(x - t) - 2.0 * self.eval(x)

    def scalar(self):
        """A plain-float callable equal to ``eval``, for scalar quadrature loops."""
        return lambda x: float(self.eval(x))

    def __add__(self, other: "Profile") -> "Profile":
        return sum_profiles([self, other])

    def __mul__(self, factor: float) -> "Profile":
        return ScaledProfile(self, float(factor))

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Constant(Profile):
    level: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "limit_neg", self.level)
        object.__setattr__(self, "limit_pos", self.level)

    def eval(self, x):
        return np.full(np.shape(x), self.level) if np.ndim(x) else self.level

    def scalar(self):
        lv = float(self.level)
        return lambda x: lv

    def deriv(self, x):
        return np.zeros(np.shape(x)) if np.ndim(x) else 0.0

    def to_dict(self):
        return {"kind": "constant", "level": self.level}


def _quintic(s):
    return (15.0 * s - 10.0 * s**3 + 3.0 * s**5) / 8.0


@dataclass(frozen=True, eq=False)
class SmoothStep(Profile):
    """``u_1(x/r)`` with the quintic step ``u_1(s) = (15 s - 10 s^3 + 3 s^5) / 8``.

    ``u_1`` is C^2 across ``s = +-1`` and equals ``+-1`` outside.
    """

    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"step width must be positive, got {self.r}")
        object.__setattr__(self, "breakpoints", (-self.r, self.r))
        object.__setattr__(self, "limit_neg", -1.0)
        object.__setattr__(self, "limit_pos", 1.0)
        object.__setattr__(self, "support_radius", self.r)

    def eval(self, x):
        s = np.clip(np.asarray(x, dtype=float) / self.r, -1.0, 1.0)
        return _quintic(s)

    def second_difference(self, x, t):
        # Inside the window the difference is the polynomial
        # (15/2) s h^2 (s^2 - 1 + h^2/2); the generic form leaves O(eps) noise
        # that t^(-1-alpha) turns into a divergent integral.
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        s = np.clip(x / self.r, -2.0, 2.0)
        h = np.minimum(np.abs(t) / self.r, 2.0)
        inside = np.abs(s) + h <= 1.0
        poly = 7.5 * s * h * h * (s * s - 1.0 + 0.5 * h * h)
        return np.where(inside, poly, Profile.second_difference(self, x, t))

    def scalar(self):
        r = self.r

        def f(x):
            s = min(max(x / r, -1.0), 1.0)
            return (15.0 * s - 10.0 * s**3 + 3.0 * s**5) / 8.0
        return f

    def deriv(self, x):
        s = np.asarray(x, dtype=float) / self.r
        inside = np.abs(s) < 1.0
        q = np.where(inside, 1.0 - s * s, 0.0)
        return 15.0 * q * q / (8.0 * self.r)

    def to_dict(self):
        return {"kind": "smooth_step", "r": self.r}


@dataclass(frozen=True, eq=False)
class HolderWedge(Profile):
    """``sgn(x)|x|^beta`` on ``|x| <= cap``, clamped to ``+-cap^beta`` outside."""

    beta: float = 0.5
    cap: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"wedge exponent must lie in (0, 1), got {self.beta}")
        top = self.cap**self.beta
        object.__setattr__(self, "breakpoints", (-self.cap, 0.0, self.cap))
        object.__setattr__(self, "kinks", (-self.cap, 0.0, self.cap))
        object.__setattr__(self, "limit_neg", -top)
        object.__setattr__(self, "limit_pos", top)
        object.__setattr__(self, "support_radius", self.cap)

    def eval(self, x):
        x = np.clip(np.asarray(x, dtype=float), -self.cap, self.cap)
        return np.sign(x) * np.abs(x) ** self.beta

    def second_difference(self, x, t):
        # With tau = t/|x| < 1 the bracket (1+tau)^beta + (1-tau)^beta - 2 is
        # formed from expm1/log1p, so the leftover roundoff is O(tau), not O(1).
        x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        ax = np.abs(x)
        smooth = (np.abs(t) < ax) & (ax + np.abs(t) <= self.cap)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            tau = np.where(smooth, np.abs(t) / np.where(ax > 0, ax, 1.0), 0.0)
            b = self.beta
            bracket = np.expm1(b * np.log1p(tau)) + np.expm1(b * np.log1p(-tau))
            near = np.sign(x) * ax**b * bracket
        return np.where(smooth, near, Profile.second_difference(self, x, t))

    def scalar(self):
        beta, cap = self.beta, self.cap

        def f(x):
            x = min(max(x, -cap), cap)
            return math.copysign(abs(x) ** beta, x) if x else 0.0
        return f

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            d = np.where(ax < self.cap, self.beta * ax ** (self.beta - 1.0), 0.0)
        return np.where((ax == 0) | (ax == self.cap), np.nan, d)

    def to_dict(self):
        return {"kind": "holder_wedge", "beta": self.beta, "cap": self.cap}


@dataclass(frozen=True, eq=False)
class ClampedRamp(Profile):
    """``scale * K * w_1(x / K)`` with ``w_1`` the identity clamped to ``[-1, 1]``."""

    K: float = 4.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.K > 2.0:
            raise ValueError(f"ramp half-width must exceed 2, got {self.K}")
        if not self.scale > 0:
            raise ValueError("ramp scale must be positive")
        top = self.scale * self.K
        object.__setattr__(self, "breakpoints", (-self.K, self.K))
        object.__setattr__(self, "kinks", (-self.K, self.K))
        object.__setattr__(self, "limit_neg", -top)
        object.__setattr__(self, "limit_pos", top)
        object.__setattr__(self, "support_radius", self.K)

    def eval(self, x):
        return self.scale * np.clip(np.asarray(x, dtype=float), -self.K, self.K)

    def second_difference(self, x, t):
        # clip(y) = y - (y - K)_+ + (-K - y)_+; the linear parts cancel exactly.
        x = np.asarray(x, dtype=float)
        K = self.K

        def over(y):
            return np.maximum(-K - y, 0.0) - np.maximum(y - K, 0.0)
        return self.scale * (over(x + t) + over(x - t) - 2.0 * over(x))

    def scalar(self):
        K, sc = self.K, self.scale
        return lambda x: sc * min(max(x, -K), K)

    def deriv(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        return np.where(ax < self.K, self.scale, np.where(ax == self.K, np.nan, 0.0))

    def to_dict(self):
        return {"kind": "clamped_ramp", "K": self.K, "scale": self.scale}


class UnitRamp(ClampedRamp):
    """``w_1`` itself (half-width 1); exempt from the ``K > 2`` requirement."""

    def __init__(self):
        object.__setattr__(self, "K", 1.0)
        object.__setattr__(self, "scale", 1.0)
        object.__setattr__(self, "breakpoints", (-1.0, 1.0))
        object.__setattr__(self, "kinks", (-1.0, 1.0))
        object.__setattr__(self, "limit_neg", -1.0)
        object.__setattr__(self, "limit_pos", 1.0)
        object.__setattr__(self, "support_radius", 1.0)

    def to_dict(self):
        return {"kind": "unit_ramp"}


@dataclass(frozen=True, eq=False)
class SumProfile(Profile):
    parts: tuple[Profile, ...] = ()

    def __post_init__(self):
        if not self.parts:
            raise ValueError("cannot sum an empty list of profiles")
        ps = self.parts
        object.__setattr__(self, "breakpoints", tuple(sorted({b for p in ps for b in p.breakpoints})))
        object.__setattr__(self, "kinks", tuple(sorted({b for p in ps for b in p.kinks})))
        object.__setattr__(self, "limit_neg", math.fsum(p.limit_neg for p in ps))
        object.__setattr__(self, "limit_pos", math.fsum(p.limit_pos for p in ps))
        object.__setattr__(self, "support_radius", max(p.support_radius for p in ps))
        object.__setattr__(self, "monotone", all(p.monotone for p in ps))

    def eval(self, x):
        out = self.parts[0].eval(x)
        for p in self.parts[1:]:
            out = out + p.eval(x)
        return out

    def scalar(self):
        fs = [p.scalar() for p in self.parts]
        return lambda x: sum(f(x) for f in fs)

    def deriv(self, x):
        out = self.parts[0].deriv(x)
        for p in self.parts[1:]:
            out = out + p.deriv(x)
        return out

    def to_dict(self):
        return {"kind": "sum", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True, eq=False)
class ScaledProfile(Profile):
    base: Profile = None
    factor: float = 1.0

    def __post_init__(self):
        b, f = self.base, self.factor
        lo, hi = f * b.limit_neg, f * b.limit_pos
        object.__setattr__(self, "breakpoints", b.breakpoints)
        object.__setattr__(self, "kinks", b.kinks)
        object.__setattr__(self, "limit_neg", lo)
        object.__setattr__(self, "limit_pos", hi)
        object.__setattr__(self, "support_radius", b.support_radius)
        object.__setattr__(self, "monotone", b.monotone and f >= 0)

    def eval(self, x):
        return self.factor * self.base.eval(x)

    def scalar(self):
        g, fac = self.base.scalar(), self.factor
        return lambda x: fac * g(x)

    def deriv(self, x):
        return self.factor * self.base.deriv(x)

    def to_dict(self):
        return {"kind": "scaled", "factor": self.factor, "base": self.base.to_dict()}


def smooth_step(r: float) -> SmoothStep:
    return SmoothStep(r)


def holder_wedge(p) -> HolderWedge:
    """The wedge ``v`` with exponent ``1 - alpha - epsilon`` and cap 2."""
    return HolderWedge(beta=1.0 - p.alpha - p.epsilon, cap=2.0)


def clamped_ramp(K_ramp: float, scale: float = 1.0) -> ClampedRamp:
    return ClampedRamp(K=K_ramp, scale=scale)


def sum_profiles(parts) -> SumProfile:
    flat = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, SumProfile) else [p])
    return SumProfile(tuple(flat))


def profile_from_dict(d: dict) -> Profile:
    kind = d["kind"]
    if kind == "smooth_step":
        return SmoothStep(d["r"])
    if kind == "holder_wedge":
        return HolderWedge(d["beta"], d.get("cap", 2.0))
    if kind == "clamped_ramp":
        return ClampedRamp(d["K"], d.get("scale", 1.0))
    if kind == "unit_ramp":
        return UnitRamp()
    if kind == "constant":
        return Constant(d["level"])
    if kind == "sum":
        return SumProfile(tuple(profile_from_dict(q) for q in d["parts"]))
    if kind == "scaled":
        return ScaledProfile(profile_from_dict(d["base"]), d["factor"])
    raise ValueError(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class Modulus:
    """A modulus of continuity ``eta`` with ``eta(0) = 0``, nondecreasing.

    kinds: ``power`` (``M s^gamma``), ``log`` (``M / |log s|`` for
    ``s <= 1/e`` and ``M`` beyond, which keeps it monotone) and ``table``
    (piecewise linear through samples, constant after the last one).
    """

    kind: str
    M: float = 1.0
    gamma: float = 1.0
    s: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("power", "log", "table"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kind in ("power", "log") and not self.M > 0:
            raise ValueError("modulus amplitude must be positive")
        if self.kind == "power" and not self.gamma > 0:
            raise ValueError("power modulus exponent must be positive")
        if self.kind == "table":
            s = np.asarray(self.s, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if s.size == 0 or s.size != v.size:
                raise ValueError("modulus table needs matching, nonempty columns")
            if np.any(np.diff(s) <= 0) or np.any(np.diff(v) < 0) or s[0] < 0 or v[0] < 0:
                raise ValueError("modulus table must be increasing in s and nondecreasing in eta")
            if s[0] == 0 and v[0] != 0:
                raise ValueError("modulus table must have eta(0) = 0")
            if s[0] > 0:
                object.__setattr__(self, "s", (0.0, *map(float, s)))
                object.__setattr__(self, "values", (0.0, *map(float, v)))
            if max(self.values) <= 0:
                raise ValueError("modulus table is identically zero")

    @classmethod
    def power(cls, M: float, gamma: float) -> "Modulus":
        return cls("power", M=M, gamma=gamma)

    @classmethod
    def log(cls, M: float) -> "Modulus":
        return cls("log", M=M)

    @classmethod
    def table(cls, s, values) -> "Modulus":
        return cls("table", s=tuple(map(float, s)), values=tuple(map(float, values)))

    @classmethod
    def parse(cls, spec: str) -> "Modulus":
        """Parse ``power:M:gamma``, ``log:M`` or ``table:path.csv`` (two columns s, eta)."""
        kind, _, rest = spec.partition(":")
        if kind == "power":
            M, gamma = rest.split(":")
            return cls.power(float(M), float(gamma))
        if kind == "log":
            return cls.log(float(rest))
        if kind == "table":
            data = np.loadtxt(Path(rest), delimiter=",", ndmin=2)
            return cls.table(data[:, 0], data[:, 1])
        raise ValueError(f"cannot parse modulus {spec!r}")

    def __call__(self, s):
        return modulus_eval(self, s)

    def to_dict(self) -> dict:
        if self.kind == "power":
            return {"kind": "power", "M": self.M, "gamma": self.gamma}
        if self.kind == "log":
            return {"kind": "log", "M": self.M}
        return {"kind": "table", "s": list(self.s), "eta": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Modulus":
        if d["kind"] == "table":
            return cls.table(d["s"], d["eta"])
        return cls(d["kind"], M=d["M"], gamma=d.get("gamma", 1.0))


def modulus_eval(eta: Modulus, s):
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("modulus argument must be nonnegative")
    if eta.kind == "power":
        out = eta.M * s_arr**eta.gamma
    elif eta.kind == "log":
        capped = np.minimum(s_arr, math.exp(-1.0))
        with np.errstate(divide="ignore"):
            out = np.where(capped > 0, eta.M / np.abs(np.log(np.where(capped > 0, capped, 0.5))), 0.0)
    else:
        out = np.interp(s_arr, eta.s, eta.values)
    return float(out) if out.ndim == 0 else out
