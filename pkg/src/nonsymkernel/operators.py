"""The nonlocal operators on profiles of ``x_1``.

Four component operators are evaluated separately::

    L1 u = int (u(x+y) - u(x)) K1 dy          even, order alpha
    L2 u = int (u(x+y) - u(x)) K2 dy          odd, truncated to B_1
    L3 u = int (u(x+y) - u(x)) K3 dy          odd, outside B_1
    L4 u = C1 u'(x)                           drift of the gradient correction

and assembled as ``L u = L1 u + a (L2 u - L4 u) - c L3 u``.  ``apply_L_direct``
integrates ``u(x+y) - u(x) - y.grad u(x) chi_B1(y)`` against the assembled
kernel with QUADPACK and never touches the decomposition, so it serves as an
independent check of the assembly.

Every function accepts a scalar ``x`` or an array of points; sweeps over an
array share one batched quadrature.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .params import ReductionConstants
from .profiles import Constant, Profile, ScaledProfile, SumProfile
from .quadrature import QuadConfig, QuadResult, graded_nodes, integrate_panels

__all__ = ["OperatorValue", "apply_L1", "apply_L2", "apply_L3", "apply_L4",
           "apply_L", "apply_L_direct", "extremal", "DerivativeUndefined"]


class DerivativeUndefined(ValueError):
    """Raised when the drift term is requested at a kink of the profile."""


@dataclass
class OperatorValue:
    value: np.ndarray | float
    error_estimate: np.ndarray | float
    parts: dict = field(default_factory=dict)


def _atoms(phi: Profile, coef: float = 1.0):
    # Linearity: evaluate each closed-form piece on its own scale.
    if isinstance(phi, SumProfile):
        for p in phi.parts:
            yield from _atoms(p, coef)
    elif isinstance(phi, ScaledProfile):
        yield from _atoms(phi.base, coef * phi.factor)
    elif isinstance(phi, Constant):
        return
    else:
        yield coef, phi


def _result(value, err, panels, ok, scalar):
    if scalar:
        return QuadResult(float(value[0]), float(err[0]), int(panels[0]), bool(ok[0]))
    return QuadResult(value, err, panels, ok)


def _stack(edge_lists):
    lo = np.concatenate([e[:-1] for e in edge_lists])
    hi = np.concatenate([e[1:] for e in edge_lists])
    own = np.repeat(np.arange(len(edge_lists)), [e.size - 1 for e in edge_lists])
    return lo, hi, own


def _images(phi: Profile, x: float) -> list[float]:
    return [abs(b - x) for b in phi.breakpoints]


def _edges(lo: float, hi: float, pts) -> np.ndarray:
    return np.unique(np.array([lo, *[p for p in pts if lo < p < hi], hi], dtype=float))


def _sum_atoms(phi, xs, single, cfg):
    """Accumulate ``single(atom, xs, cfg)`` over the atoms of ``phi``."""
    val = np.zeros(xs.size)
    err = np.zeros(xs.size)
    npan = np.ones(xs.size, dtype=int)
    ok = np.ones(xs.size, dtype=bool)
    for coef, atom in _atoms(phi):
        v, e, n, c = single(atom, xs, cfg)
        val += coef * v
        err += abs(coef) * e
        npan += n
        ok &= c
    return val, err, npan, ok


def apply_L1(phi: Profile, x, consts: ReductionConstants, cfg: QuadConfig = QuadConfig()):
    """``c0 * int_0^inf (phi(x+t) + phi(x-t) - 2 phi(x)) t^(-1-alpha) dt``.

    The symmetrised integrand is integrated panel by panel out to the last
    breakpoint image ``T``; beyond ``T`` it is the constant
    ``limit_pos + limit_neg - 2 phi(x)`` and the tail is added in closed form.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    alpha = consts.alpha

    def single(atom, xs, cfg):
        fx = np.asarray(atom.eval(xs), dtype=float)
        edges, T = [], np.empty(xs.size)
        for i, xi in enumerate(xs):
            imgs = [p for p in _images(atom, xi) if p > 0]
            T[i] = max(imgs) if imgs else 1.0
            first = min(imgs) if imgs else 1.0
            seeds = [cfg.singularity_split * first] + graded_nodes(first)
            edges.append(_edges(0.0, T[i], imgs + seeds))
        lo, hi, own = _stack(edges)

        def f(t, o):
            xo = xs[o]
            return atom.second_difference(xo, t) * t ** (-1.0 - alpha)

        v, e, n, ok = integrate_panels(f, lo, hi, own, xs.size, cfg)
        jump = atom.limit_pos + atom.limit_neg - 2.0 * fx
        return v + jump * T ** (-alpha) / alpha, e, n, ok

    val, err, npan, ok = _sum_atoms(phi, xs, single, cfg)
    return _result(consts.c0 * val, consts.c0 * err, npan, ok, scalar)


def apply_L2(phi: Profile, x, consts: ReductionConstants, cfg: QuadConfig = QuadConfig()):
    """``skew * int_0^1 (phi(x+t) - phi(x-t)) ball_weight(t) dt``."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def single(atom, xs, cfg):
        edges = [_edges(0.0, 1.0, _images(atom, xi)) for xi in xs]
        lo, hi, own = _stack(edges)

        def f(t, o):
            xo = xs[o]
            return (atom.eval(xo + t) - atom.eval(xo - t)) * consts.ball_weight(t)

        return integrate_panels(f, lo, hi, own, xs.size, cfg)

    val, err, npan, ok = _sum_atoms(phi, xs, single, cfg)
    s = consts.params.skew
    return _result(s * val, s * err, npan, ok, scalar)


def apply_L3(phi: Profile, x, consts: ReductionConstants, cfg: QuadConfig = QuadConfig()):
    """``skew * int_0^inf (phi(x+t) - phi(x-t)) tail_weight(t) dt`` with an exact tail."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    alpha = consts.alpha
    start = 1.0 if consts.params.dim_n == 1 else 0.0

    def single(atom, xs, cfg):
        edges, T = [], np.empty(xs.size)
        for i, xi in enumerate(xs):
            imgs = _images(atom, xi)
            T[i] = max(imgs + [1.0])
            edges.append(_edges(start, T[i], imgs + [1.0]))
        lo, hi, own = _stack(edges)

        def f(t, o):
            xo = xs[o]
            return (atom.eval(xo + t) - atom.eval(xo - t)) * consts.tail_weight(t)

        v, e, n, ok = integrate_panels(f, lo, hi, own, xs.size, cfg)
        jump = atom.limit_pos - atom.limit_neg
        return v + jump * consts.A_cross * T ** (-alpha) / alpha, e, n, ok

    val, err, npan, ok = _sum_atoms(phi, xs, single, cfg)
    s = consts.params.skew
    return _result(s * val, s * err, npan, ok, scalar)


def _check_smooth(phi: Profile, xs) -> None:
    bad = np.isin(xs, np.asarray(phi.kinks, dtype=float))
    if bad.any():
        raise DerivativeUndefined(f"derivative undefined at kink x={xs[bad][0]!r}")


def apply_L4(phi: Profile, x, consts: ReductionConstants):
    """``C1 * phi'(x)``; raises :class:`DerivativeUndefined` at kinks."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    _check_smooth(phi, xs)
    d = consts.C1 * np.asarray(phi.deriv(xs), dtype=float)
    return float(d[0]) if np.ndim(x) == 0 else d


def _coef(field_, xs):
    if callable(field_):
        return np.asarray(field_(xs), dtype=float) * np.ones(xs.size)
    return np.full(xs.size, float(field_))


def apply_L(phi: Profile, a, c, x, consts: ReductionConstants,
            cfg: QuadConfig = QuadConfig()) -> OperatorValue:
    """Assemble ``L1 + a (L2 - L4) - c L3``; ``a`` and ``c`` are constants or fields."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    l4 = np.atleast_1d(apply_L4(phi, xs, consts))
    r1 = apply_L1(phi, xs, consts, cfg)
    r2 = apply_L2(phi, xs, consts, cfg)
    r3 = apply_L3(phi, xs, consts, cfg)
    av, cv = _coef(a, xs), _coef(c, xs)
    value = r1.value + av * (r2.value - l4) - cv * r3.value
    err = r1.error_estimate + np.abs(av) * r2.error_estimate + np.abs(cv) * r3.error_estimate
    parts = {"L1": r1.value, "L2": r2.value, "L3": r3.value, "L4": l4, "a": av, "c": cv}
    if scalar:
        return OperatorValue(float(value[0]), float(err[0]),
                             {k: float(v[0]) for k, v in parts.items()})
    return OperatorValue(value, err, parts)


_DIRECT_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=2000)


def _quad(f, lo, hi, pts=()):
    inner = sorted({p for p in pts if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _quad_raw(f, lo, hi, inner)


def _quad_raw(f, lo, hi, inner):
    if np.isinf(hi):
        return integrate.quad(f, lo, hi, **_DIRECT_OPTS)
    return integrate.quad(f, lo, hi, points=inner or None, **_DIRECT_OPTS)


def _direct_one(phi: Profile, u, a: float, c: float, x: float, consts: ReductionConstants, weights):
    p = consts.params
    power, ball, tail, inner = weights
    sym, skew = p.sym, p.skew
    fx = u(x)
    dfx = float(phi.deriv(x))
    T = max([abs(b - x) for b in phi.breakpoints] + [1.0])
    # Geometric seeds resolve structure living at the scale of |x| and of the
    # nearest breakpoint; quad alone does not see them on the kink-free side.
    scales = []
    for q in sorted({abs(x)} | {abs(b - x) for b in phi.breakpoints}):
        if 0 < q < 1.0 and (not scales or q > 2.0 * scales[-1]):
            scales.append(q)
    seeds = sorted({q * 4.0**k for q in scales for k in range(-2, 30) if q * 4.0**k < 1.0})
    total, err = 0.0, 0.0
    for s in (1.0, -1.0):
        kinks = [s * (b - x) for b in phi.breakpoints]
        kinks = [k for k in kinks if k > 0]

        def near(t, s=s):
            pw, bw = power(t), ball(t)
            kern = sym * pw + a * s * skew * bw - c * s * skew * tail(t)
            return (u(x + s * t) - fx) * kern - s * t * dfx * (sym * inner(t) + a * s * skew * bw)

        def far(t, s=s):
            return (u(x + s * t) - fx) * (sym - c * s * skew) * power(t)

        for f, lo, hi in ((near, 0.0, 1.0), (far, 1.0, T), (far, T, np.inf)):
            if hi > lo:
                v, e = _quad(f, lo, hi, kinks + seeds)
                total += v
                err += e
    return total, err


def apply_L_direct(phi: Profile, a, c, x, consts: ReductionConstants) -> QuadResult:
    """Integrate ``u(x+y) - u(x) - y.grad u(x) chi_B1(y)`` against ``K(x, .)`` directly.

    The integral is split at ``t = 0`` into one-sided pieces (no pairing of
    ``+t`` with ``-t``); the gradient correction is folded into the one-sided integrand on ``|t| < 1``.
    """
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    _check_smooth(phi, xs)
    av, cv = _coef(a, xs), _coef(c, xs)
    u, weights = phi.scalar(), consts.scalar_weights()
    out = np.array([_direct_one(phi, u, av[i], cv[i], xi, consts, weights) for i, xi in enumerate(xs)])
    n = np.ones(xs.size, dtype=int)
    return _result(out[:, 0], out[:, 1], n, np.ones(xs.size, dtype=bool), scalar)


def extremal(phi: Profile, x, consts: ReductionConstants, sign: int = +1,
             cfg: QuadConfig = QuadConfig()) -> QuadResult:
    """Pucci-type extremal operator ``M+`` (``sign=+1``) or ``M-`` (``sign=-1``).

    With ``g`` the increment including the gradient correction on ``B_1``, the
    optimal kernel is ``Lam |y|^(-n-alpha)`` where ``g > 0`` and
    ``lam |y|^(-n-alpha)`` where ``g < 0`` (swapped for ``M-``).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    _check_smooth(phi, xs)
    p = consts.params
    hi_w, lo_w = (p.Lam, p.lam) if sign == 1 else (p.lam, p.Lam)
    fx = np.asarray(phi.eval(xs), dtype=float)
    dfx = np.asarray(phi.deriv(xs), dtype=float)
    alpha = p.alpha

    def pick(g):
        return np.where(g > 0, hi_w, lo_w) * g

    val = np.zeros(xs.size)
    err = np.zeros(xs.size)
    npan = np.zeros(xs.size, dtype=int)
    ok = np.ones(xs.size, dtype=bool)
    for s in (1.0, -1.0):
        edges, T = [], np.empty(xs.size)
        for i, xi in enumerate(xs):
            kinks = [s * (b - xi) for b in phi.breakpoints]
            kinks = [k for k in kinks if k > 0]
            T[i] = max(kinks + [1.0])
            first = min(kinks + [1.0])
            edges.append(_edges(0.0, T[i], kinks + [1.0] + graded_nodes(first)))
        lo, hi, own = _stack(edges)

        def f(t, o, s=s):
            xo, fo, do = xs[o], fx[o], dfx[o]
            inc = phi.eval(xo + s * t) - fo
            g_in = inc - s * t * do
            return pick(g_in) * consts.inner_weight(t) + pick(inc) * consts.tail_weight(t)

        v, e, n, c = integrate_panels(f, lo, hi, own, xs.size, cfg)
        lim = phi.limit_pos if s > 0 else phi.limit_neg
        tail = pick(lim - fx) * consts.A_cross * T ** (-alpha) / alpha
        val += v + tail
        err += e
        npan += n
        ok &= c
    return _result(val, err, npan, ok, scalar)
