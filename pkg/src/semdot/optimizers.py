"""Design-variable updates: MMA with one volume constraint, and optimality criteria.

The MMA subproblem is convex and separable. With a single constraint its
dual is a concave function of one multiplier, so it is maximized by
bisection on the dual gradient instead of a primal-dual interior point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SubproblemError(RuntimeError):
    """The MMA subproblem has no finite solution (bad gradients or bounds)."""


class BracketError(RuntimeError):
    """The OC multiplier bisection could not bracket the volume target."""


@dataclass
class MmaState:
    """Asymptotes and iterate history carried between MMA calls.

    ``move`` is the move limit as a fraction of the variable range.
    Subproblem constants follow the usual defaults ``a0=1, a=0, c=1000, d=1``.
    """

    xmin: float = 0.001
    xmax: float = 1.0
    move: float = 0.5
    asyinit: float = 0.5
    asyincr: float = 1.2
    asydecr: float = 0.7
    albefa: float = 0.1
    raa0: float = 1e-5
    a0: float = 1.0
    a: float = 0.0
    c: float = 1000.0
    d: float = 1.0
    iteration: int = 0
    low: np.ndarray | None = None
    upp: np.ndarray | None = None
    xold1: np.ndarray | None = None
    xold2: np.ndarray | None = None
    y: float = field(default=0.0)


def _asymptotes(state: MmaState, x: np.ndarray, span: float):
    if state.iteration <= 2 or state.low is None:
        return x - state.asyinit * span, x + state.asyinit * span
    zzz = (x - state.xold1) * (state.xold1 - state.xold2)
    factor = np.ones_like(x)
    factor[zzz > 0] = state.asyincr
    factor[zzz < 0] = state.asydecr
    low = x - factor * (state.xold1 - state.low)
    upp = x + factor * (state.upp - state.xold1)
    low = np.clip(low, x - 10 * span, x - 0.01 * span)
    upp = np.clip(upp, x + 0.01 * span, x + 10 * span)
    return low, upp


def mma_update(x: np.ndarray, dc: np.ndarray, dv: np.ndarray, target: float,
               state: MmaState, constraint: float | None = None) -> np.ndarray:
    """One MMA step for ``min C(x)`` subject to ``dv . x - target <= 0``.

    ``dv`` is the (constant) gradient of the volume fraction. ``constraint``
    overrides the constraint value at ``x``; by default it is
    ``dv . x - target``. The constraint is scaled by ``1/target`` internally.
    ``state`` is updated in place and the new iterate returned.
    """
    x = np.asarray(x, dtype=float)
    dc = np.asarray(dc, dtype=float)
    dv = np.asarray(dv, dtype=float)
    if not (np.all(np.isfinite(dc)) and np.all(np.isfinite(dv))):
        raise SubproblemError("non-finite gradient passed to MMA")
    state.iteration += 1
    if state.xold1 is None:
        state.xold1 = x.copy()
        state.xold2 = x.copy()
    span = state.xmax - state.xmin
    g0 = (float(dv @ x) - target) if constraint is None else constraint
    g0 /= target
    dg = dv / target

    low, upp = _asymptotes(state, x, span)
    alfa = np.maximum.reduce([low + state.albefa * (x - low), x - state.move * span,
                              np.full_like(x, state.xmin)])
    beta = np.minimum.reduce([upp - state.albefa * (upp - x), x + state.move * span,
                              np.full_like(x, state.xmax)])
    if np.any(alfa > beta):
        raise SubproblemError("empty box after applying move limits")

    ux1 = upp - x
    xl1 = x - low
    ux2, xl2 = ux1 * ux1, xl1 * xl1
    reg = state.raa0 / max(span, 1e-5)
    p0 = np.maximum(dc, 0.0)
    q0 = np.maximum(-dc, 0.0)
    pq0 = 0.001 * (p0 + q0) + reg
    p0 = (p0 + pq0) * ux2
    q0 = (q0 + pq0) * xl2
    p1 = np.maximum(dg, 0.0)
    q1 = np.maximum(-dg, 0.0)
    pq1 = 0.001 * (p1 + q1) + reg
    p1 = (p1 + pq1) * ux2
    q1 = (q1 + pq1) * xl2
    b = float(p1 @ (1.0 / ux1) + q1 @ (1.0 / xl1)) - g0

    def primal(lam):
        P = p0 + lam * p1
        Q = q0 + lam * q1
        sp_, sq = np.sqrt(P), np.sqrt(Q)
        xs = (sq * upp + sp_ * low) / (sp_ + sq)
        xs = np.clip(xs, alfa, beta)
        y = max(0.0, (lam - state.c) / state.d)
        return xs, y

    def dual_grad(lam):
        xs, y = primal(lam)
        g = float(p1 @ (1.0 / (upp - xs)) + q1 @ (1.0 / (xs - low)))
        return g - y - b, xs, y

    h0, xs, y = dual_grad(0.0)
    if h0 > 0.0:
        lo, hi = 0.0, 1.0
        while dual_grad(hi)[0] > 0.0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e30:
                raise SubproblemError("dual multiplier diverged")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if dual_grad(mid)[0] > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-14 * max(1.0, hi):
                break
        _, xs, y = dual_grad(hi)
    if not np.all(np.isfinite(xs)):
        raise SubproblemError("MMA subproblem produced non-finite design")

    state.xold2 = state.xold1
    state.xold1 = x.copy()
    state.low, state.upp, state.y = low, upp, y
    return xs


def oc_update(x: np.ndarray, dc: np.ndarray, dv: np.ndarray, target: float,
              move: float = 0.2, xmin: float = 0.001, xmax: float = 1.0,
              filter_fn=None) -> np.ndarray:
    """Optimality-criteria fixed point with a bisected Lagrange multiplier.

    ``filter_fn`` maps candidate raw designs to the field whose volume
    ``dv . x`` must equal ``target`` (identity by default).
    """
    x = np.asarray(x, dtype=float)
    dc = np.asarray(dc, dtype=float)
    dv = np.asarray(dv, dtype=float)
    if np.any(dc > 0):
        raise ValueError("OC update needs non-positive objective gradients")
    fn = (lambda z: z) if filter_fn is None else filter_fn
    ratio = np.divide(-dc, dv, out=np.zeros_like(dc), where=dv > 0)
    lo_x = np.maximum(xmin, x - move)
    hi_x = np.minimum(xmax, x + move)

    def candidate(lmid):
        return np.clip(x * np.sqrt(ratio / lmid), lo_x, hi_x)

    def vol(z):
        return float(dv @ fn(z))

    if vol(lo_x) > target + 1e-12 or vol(hi_x) < target - 1e-12:
        raise BracketError("volume target unreachable within move limits")
    l1, l2 = 0.0, max(float(ratio.max()), 1e-300) * 1e4
    while vol(candidate(l2)) > target:
        l2 *= 10.0
        if l2 > 1e300:
            raise BracketError("could not bracket OC multiplier")
    xnew = candidate(l2)
    for _ in range(300):
        lmid = 0.5 * (l1 + l2)
        xnew = candidate(lmid)
        v = vol(xnew)
        if abs(v - target) < 1e-9:
            break
        if v > target:
            l1 = lmid
        else:
            l2 = lmid
        if l2 - l1 <= 1e-15 * l2:
            break
    return xnew
