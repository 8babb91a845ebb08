"""Renormalization operator on truncated series and a Newton solver for its fixed point.

Coefficients live in ``u = (|x|/rho)**d``.  For a center ``G(u) = sum c_k u**k``
the operator is

    R(G)(u) = alpha * G( H(u)**d / rho**d ),   H(u) = sum_k c_k s**(dk) u**k,

with ``alpha = 1/G(rho**-d)`` (that is ``1/g(1)``) and inner scale
``s = 1/alpha`` for even ``d`` or ``s = -1/alpha`` for odd ``d``.  The constant
coefficient of ``R(G)`` is always ``alpha * G(rho**-d) = 1``.

Everything here is plain floating point; rigor enters only once the center is
wrapped into a :class:`~feigdim.ball.FunctionBall` with a radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ball import BallProvenance, FunctionBall
from .errors import CompositionDivergence, NoConvergence, SingularAlpha
from .interval import Interval

DEFAULT_SCHEDULE = (1, 2, 3, 5, 8, 12, 20, 28, 36, 40)


@dataclass(frozen=True)
class RenormConfig:
    degree_d: int
    truncation_N: int
    newton_tol: float = 1e-12
    max_iters: int = 40
    # coefficients of x**d, x**(2d), ... (the constant 1 is implied)
    seed_coeffs: tuple = (-1.5,)
    rho: float = 1.25
    schedule: tuple = DEFAULT_SCHEDULE

    def __post_init__(self):
        if self.degree_d not in (2, 3, 4):
            raise ValueError("degree_d must be 2, 3 or 4")
        if self.truncation_N < 5:
            raise ValueError("truncation_N must be at least 5")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")

    def seed_vector(self, n: int) -> np.ndarray:
        """Seed in u-coefficients, padded or cut to length n+1."""
        c = np.zeros(n + 1)
        c[0] = 1.0
        for k, a in enumerate(self.seed_coeffs, start=1):
            if k <= n:
                c[k] = a * self.rho ** (self.degree_d * k)
        return c


@dataclass(frozen=True)
class RenormConstants:
    alpha: Interval
    alpha_inv: Interval
    degree_d: int

    def __post_init__(self):
        if not self.alpha.hi < -1:
            raise SingularAlpha(f"alpha enclosure {self.alpha} is not below -1")


def inner_scale(alpha, degree_d: int):
    """Scale applied to x before the inner g: 1/alpha (even d) or -1/alpha (odd d)."""
    s = 1 / alpha
    return s if degree_d % 2 == 0 else -s


def _trunc_mul(a, b, m):
    return np.convolve(a, b)[: m + 1]


def _compose(c, cfg: RenormConfig, m: int, check: bool):
    d, rho = cfg.degree_d, cfg.rho
    n = len(c) - 1
    g1 = np.polynomial.polynomial.polyval(rho ** -d, c)
    alpha = 1 / g1
    s = inner_scale(alpha, d)
    k = np.arange(n + 1)
    h = c * s ** (d * k)
    w = np.zeros(m + 1, dtype=h.dtype)
    w[0] = 1
    for _ in range(d):
        w = _trunc_mul(w, h, m)
    w = w / rho**d
    if check:
        _check_inner(np.real(w))
    out = np.zeros(m + 1, dtype=h.dtype)
    for ck in c[::-1]:
        out = _trunc_mul(out, w, m)
        out[0] += ck
    return alpha * out


_CHECK_GRID = np.linspace(0.0, 1.0, 1025)


def _check_inner(w):
    # the pipeline only ever evaluates on real x with |x| <= rho, i.e. u in [0, 1]
    vals = np.polynomial.polynomial.polyval(_CHECK_GRID, w)
    worst = float(np.max(np.abs(vals)))
    if not worst <= 1:
        raise CompositionDivergence(
            f"inner value reaches |u| = {worst:.6g} > 1 on the real segment")


def apply_R(coeffs, cfg: RenormConfig, *, with_tail: bool = False, check: bool = False):
    """One application of the operator, truncated to the input length.

    With ``with_tail`` the composition is carried to degree ``2N`` and the l1
    mass of the discarded coefficients is returned as a second value.
    """
    c = np.asarray(coeffs)
    n = len(c) - 1
    if not with_tail:
        return _compose(c, cfg, n, check)
    full = _compose(c, cfg, 2 * n, check)
    return full[: n + 1], float(np.sum(np.abs(full[n + 1:])))


def _jacobian(c, cfg):
    n = len(c) - 1
    jac = np.empty((n, n))
    h = 1e-30
    for j in range(n):
        cc = c.astype(complex)
        cc[j + 1] += h * 1j
        jac[:, j] = (apply_R(cc, cfg) - cc).imag[1:] / h
    return jac


def _alpha_float(c, cfg):
    return 1 / np.polynomial.polynomial.polyval(cfg.rho ** -cfg.degree_d, c)


def _newton_stage(c, cfg, tol, history):
    best_c, best_res = c, math.inf
    stall = 0
    for _ in range(cfg.max_iters):
        f = apply_R(c, cfg) - c
        res = float(np.sum(np.abs(f)))
        if history is not None:
            history.append(res)
        if not math.isfinite(res):
            break
        if res < best_res:
            if res > 0.5 * best_res:
                stall += 1
            else:
                stall = 0
            best_c, best_res = c, res
        else:
            stall += 1
        if res <= tol or stall >= 3:
            break
        step = np.linalg.lstsq(_jacobian(c, cfg), f[1:], rcond=None)[0]
        c = c.copy()
        c[1:] -= step
    return best_c, best_res


def newton_fixpoint(cfg: RenormConfig, history: list | None = None):
    """Approximate fixed point of the truncated operator.

    Continuation over increasing truncations; returns ``(coeffs, residual_l1)``.
    ``history`` (if given) receives the residual of every iterate of the final stage.
    """
    stages = [n for n in cfg.schedule if n < cfg.truncation_N] + [cfg.truncation_N]
    c = cfg.seed_vector(stages[0])
    res = math.inf
    for i, n in enumerate(stages):
        if len(c) < n + 1:
            c = np.concatenate([c, np.zeros(n + 1 - len(c))])
        last = i == len(stages) - 1
        c, res = _newton_stage(c, cfg, cfg.newton_tol if last else min(cfg.newton_tol, 1e-12),
                               history if last else None)
        if not math.isfinite(res):
            raise NoConvergence(f"Newton diverged at truncation {n}", res)
        alpha = _alpha_float(c, cfg)
        if not alpha < -1:
            raise NoConvergence(
                f"converged to a non-Feigenbaum fixed point (alpha = {alpha:.6g}) "
                f"at truncation {n}; try another seed", res)
    if res > cfg.newton_tol:
        raise NoConvergence("residual above newton_tol", res)
    apply_R(c, cfg, check=True)
    return c, res


def alpha_of(ball: FunctionBall) -> RenormConstants:
    g1 = ball.eval(Interval(1.0, 1.0))
    if g1.lo <= 0 <= g1.hi:
        raise SingularAlpha(f"g(1) enclosure {g1} contains 0")
    return RenormConstants(alpha=Interval(1.0, 1.0) / g1, alpha_inv=g1,
                           degree_d=ball.degree_d)


def config_for_ball(ball: FunctionBall) -> RenormConfig:
    return RenormConfig(degree_d=ball.degree_d, truncation_N=max(ball.truncation_N, 5),
                        rho=ball.rho)


def residual_diagnostic(ball: FunctionBall) -> float:
    """l1 norm of R(center) - center over the retained coefficients (informational)."""
    c = ball.center
    return float(np.sum(np.abs(apply_R(c, config_for_ball(ball)) - c)))


def tail_mass(ball: FunctionBall) -> float:
    return apply_R(ball.center, config_for_ball(ball), with_tail=True)[1]


def make_ball(cfg: RenormConfig, coeffs, radius: float, residual_l1: float = math.nan,
              radius_supplied: bool = True, t_max: float | None = None) -> FunctionBall:
    """Wrap a float center into a ball.

    The rigor flag is raised only for a positive, explicitly supplied radius
    that dominates ten times the truncated tail mass of the center.
    """
    c = np.array(coeffs, dtype=np.float64)
    _, tail = apply_R(c, cfg, with_tail=True)
    rigorous = bool(radius_supplied and radius > 0 and tail <= radius / 10)
    prov = BallProvenance(source="newton_computed", residual_l1=float(residual_l1),
                          assumed_rigorous=rigorous, tail_mass=tail)
    kw = {} if t_max is None else {"t_max": t_max}
    return FunctionBall.from_center(cfg.degree_d, cfg.rho, c, radius, provenance=prov, **kw)
