"""Rigorous inverse of g restricted to J, by monotone bisection.

For a target enclosure Y the result X = [a, b] satisfies

    g([a,a]).lo >= Y.hi   and   g([b,b]).hi <= Y.lo,

so with g strictly decreasing on the certified domain every preimage of
every y in Y lies in X.  Only these two sign tests are needed for
correctness; how a and b are found is a matter of speed.

:func:`invert` is the scalar reference (plain bisection from the whole
certified domain).  :func:`invert_bounds` is the vectorized path used by the
IFS: it guesses a and b from a floating-point Newton solve on the center
polynomial, checks the guesses with the same two tests, and bisects only the
queries whose guesses fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ball import FunctionBall
from .errors import DerivativeContainsZero, RangeError, ToleranceUnreachable
from .interval import Interval, IntervalArray, _down, _up
from .monotonicity import MonotonicityCertificate

DEFAULT_TOL = 1e-14


@dataclass(frozen=True)
class InverseQuery:
    Y: Interval
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class InverseStats:
    iterations_left: int
    iterations_right: int


def _check_query(cert: MonotonicityCertificate, ylo, yhi):
    rng = cert.g_range
    ylo = np.asarray(ylo)
    yhi = np.asarray(yhi)
    if np.any(ylo < rng.lo) or np.any(yhi > rng.hi):
        raise RangeError(f"target outside g(J) enclosure {rng}")
    if np.any(yhi - ylo > rng.width() / 4):
        raise RangeError("target interval wider than a quarter of g(J); refusing")


def _bisect(ball, dom_lo, dom_hi, ylo, yhi, tol):
    """Vectorized two-sided bisection; returns (a, b, iters_a, iters_b)."""
    n = ylo.size
    # left search: largest a with g(a).lo >= Y.hi
    lo = np.full(n, dom_lo)
    hi = np.full(n, dom_hi)
    right_best = np.full(n, dom_hi)  # smallest point seen with g.hi <= Y.lo
    it_a = 0
    active = np.ones(n, dtype=bool)
    while np.any(active):
        idx = np.flatnonzero(active)
        m = 0.5 * lo[idx] + 0.5 * hi[idx]
        stuck = (m <= lo[idx]) | (m >= hi[idx])
        glo, ghi = ball.eval_bounds(IntervalArray(m, m, check=False))
        ok = glo >= yhi[idx]
        lo[idx] = np.where(ok & ~stuck, m, lo[idx])
        hi[idx] = np.where(~ok & ~stuck, m, hi[idx])
        rgt = (ghi <= ylo[idx]) & ~stuck
        right_best[idx] = np.where(rgt, np.minimum(right_best[idx], m), right_best[idx])
        done = stuck | (hi[idx] - lo[idx] <= tol / 2)
        active[idx[done]] = False
        it_a += 1
    a = lo
    # right search: smallest b with g(b).hi <= Y.lo, starting from [a, best seen]
    lo = a.copy()
    hi = right_best
    it_b = 0
    active = hi - lo > tol / 2
    while np.any(active):
        idx = np.flatnonzero(active)
        m = 0.5 * lo[idx] + 0.5 * hi[idx]
        stuck = (m <= lo[idx]) | (m >= hi[idx])
        _, ghi = ball.eval_bounds(IntervalArray(m, m, check=False))
        ok = ghi <= ylo[idx]
        hi[idx] = np.where(ok & ~stuck, m, hi[idx])
        lo[idx] = np.where(~ok & ~stuck, m, lo[idx])
        done = stuck | (hi[idx] - lo[idx] <= tol / 2)
        active[idx[done]] = False
        it_b += 1
    return a, hi, it_a, it_b


def _verify_ends(ball, dom, a, b, ylo, yhi):
    """Vectorized check of the two defining tests at candidate endpoints."""
    a = np.maximum(a, dom.lo)
    b = np.minimum(b, dom.hi)
    pts = np.concatenate([a, b])
    glo, ghi = ball.eval_bounds(IntervalArray(pts, pts, check=False))
    n = a.size
    return (glo[:n] >= yhi) & (a <= b), (ghi[n:] <= ylo) & (a <= b), a, b


def invert(ball: FunctionBall, cert: MonotonicityCertificate, q: InverseQuery,
           *, strict: bool = False, stats: list | None = None) -> Interval:
    """Enclosure of g^{-1}(Y) on J by bisection over the certified domain.

    ``tol`` is the bisection resolution; the achievable width is floored by
    the enclosure width of g.  With ``strict`` a result wider than ``tol``
    raises :class:`ToleranceUnreachable`.
    """
    cert.check_ball(ball)
    Y = q.Y
    _check_query(cert, Y.lo, Y.hi)
    dom = cert.domain
    a, b, ia, ib = _bisect(ball, dom.lo, dom.hi, np.array([Y.lo]), np.array([Y.hi]), q.tol)
    if stats is not None:
        stats.append(InverseStats(ia, ib))
    X = Interval(float(a[0]), float(b[0]))
    if strict and X.width() > q.tol:
        raise ToleranceUnreachable(
            f"inverse width {X.width():.3e} exceeds tol {q.tol:.3e}; "
            "the enclosure width of g sets the floor")
    return X


def _newton_center(ball: FunctionBall, y, x0, lo, hi, iters=30):
    # each query stops on its own test, so a result never depends on its batch
    x = np.clip(np.full_like(y, x0), lo, hi)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xi = x[idx]
        step = (ball.center_value(xi) - y[idx]) / ball.center_deriv(xi)
        x[idx] = np.clip(xi - step, lo, hi)
        active[idx[np.abs(step) <= 1e-17 + 4e-16 * np.abs(x[idx])]] = False
    return x


def invert_bounds(ball: FunctionBall, cert: MonotonicityCertificate, ylo, yhi,
                  tol: float = DEFAULT_TOL):
    """Vectorized inverse: arrays (a, b) with the same guarantee as :func:`invert`."""
    ylo = np.asarray(ylo, dtype=np.float64)
    yhi = np.asarray(yhi, dtype=np.float64)
    _check_query(cert, ylo, yhi)
    dom = cert.domain
    ymid = 0.5 * ylo + 0.5 * yhi
    x = _newton_center(ball, ymid, 0.5 * (dom.lo + dom.hi), dom.lo, dom.hi)
    # local enclosure width at x, then step out by (distance to target + width)/slope
    glo, ghi = ball.eval_bounds(IntervalArray(x, x, check=False))
    slope = np.maximum(np.abs(ball.center_deriv(x)) * 0.999, cert.min_abs_gprime)
    ulp = np.spacing(np.abs(x)) * 2
    da = np.maximum(yhi - glo, 0.0) / slope
    db = np.maximum(ghi - ylo, 0.0) / slope
    a = _down(x - da * 1.001 - ulp)
    b = _up(x + db * 1.001 + ulp)
    ok_a, ok_b, a, b = _verify_ends(ball, dom, a, b, ylo, yhi)
    for _ in range(4):
        if np.all(ok_a) and np.all(ok_b):
            break
        da = np.where(ok_a, da, 2 * da + 4 * ulp)
        db = np.where(ok_b, db, 2 * db + 4 * ulp)
        a2 = np.where(ok_a, a, _down(x - da))
        b2 = np.where(ok_b, b, _up(x + db))
        na, nb, a2, b2 = _verify_ends(ball, dom, a2, b2, ylo, yhi)
        a = np.where(ok_a, a, a2)
        b = np.where(ok_b, b, b2)
        ok_a |= na
        ok_b |= nb
    bad = ~(ok_a & ok_b)
    if np.any(bad):
        fa, fb, _, _ = _bisect(ball, dom.lo, dom.hi, ylo[bad], yhi[bad], tol)
        a = a.copy()
        b = b.copy()
        a[bad], b[bad] = fa, fb
    return a, b


def inverse_deriv(ball: FunctionBall, cert: MonotonicityCertificate, q: InverseQuery,
                  **kw) -> Interval:
    """Enclosure of (g^{-1})'(y) = 1/g'(x) for all y in Y."""
    X = invert(ball, cert, q, **kw)
    gp = ball.eval_deriv(X)
    if not gp.hi < 0:
        raise DerivativeContainsZero(
            f"g' enclosure {gp} on {X} is not negative; certificate violated")
    return Interval(1.0, 1.0) / gp
