"""The two-map IFS on I = [1/alpha, 1] and the partition-function dimension bounds.

    Psi0(x) = x/alpha            (order reversing, derivative 1/alpha)
    Psi1(x) = g^{-1}(x/alpha)    (order preserving)

A generation is stored as a structure of arrays: for node i the outermost
symbol is the top bit of i, the endpoint enclosures of I_sigma are ordered
left <= right, and deriv_left/deriv_right enclose |Psi_sigma'| at the point of
I mapped to that endpoint.  Each expansion multiplies one new factor into the
stored derivative (chain rule), so generation n costs O(2**n).

Bounds per node use the endpoint shortcut licensed by the g'' certificate:
c_sigma = max of the endpoint derivative upper bounds, d_sigma = min of the
lower bounds.  The roots of sum c**s = 1 and sum d**r = 1 then satisfy
r <= dim_H <= s.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ball import FunctionBall
from .errors import (
    CertificateError,
    ContractionViolation,
    FeigdimError,
    NodeOrderViolation,
    NoRoot,
    ToleranceFloor,
    WidthAbort,
)
from .interval import (
    Interval,
    IntervalArray,
    _down,
    _exp_point_bounds,
    _log_point_bounds,
    _up,
    add_rd,
    add_ru,
    fast_mul_bounds,
    mul_rd,
    mul_ru,
    tree_sum,
)
from .inverse import DEFAULT_TOL, invert_bounds
from .monotonicity import MonotonicityCertificate
from .renorm import RenormConstants

DEFAULT_WIDTH_LIMIT = 1e-8
DEFAULT_PARTITION_TOL = 1e-12
CHUNK = 1 << 15


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolSequence:
    bits: tuple  # leftmost = outermost map

    @classmethod
    def from_index(cls, i: int, n: int) -> "SymbolSequence":
        return cls(tuple((i >> (n - 1 - j)) & 1 for j in range(n)))

    def index(self) -> int:
        i = 0
        for b in self.bits:
            i = 2 * i + b
        return i

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "".join(map(str, self.bits))


@dataclass(frozen=True)
class IFSNode:
    sigma: SymbolSequence
    left_pt: Interval
    right_pt: Interval
    deriv_left: Interval
    deriv_right: Interval


@dataclass(frozen=True)
class ContractionBounds:
    c_sigma: Interval
    d_sigma: Interval


@dataclass(frozen=True)
class DimensionBounds:
    generation: int
    r_n: float
    s_n: float
    node_count: int
    max_width: float
    wall_time: float


@dataclass
class Generation:
    n: int
    l_lo: np.ndarray
    l_hi: np.ndarray
    r_lo: np.ndarray
    r_hi: np.ndarray
    dl_lo: np.ndarray
    dl_hi: np.ndarray
    dr_lo: np.ndarray
    dr_hi: np.ndarray

    def __len__(self):
        return self.l_lo.size

    def node(self, i: int) -> IFSNode:
        return IFSNode(SymbolSequence.from_index(i, self.n),
                       Interval(self.l_lo[i], self.l_hi[i]), Interval(self.r_lo[i], self.r_hi[i]),
                       Interval(self.dl_lo[i], self.dl_hi[i]), Interval(self.dr_lo[i], self.dr_hi[i]))

    def nodes(self):
        return [self.node(i) for i in range(len(self))]

    @property
    def max_width(self) -> float:
        if not len(self):
            return 0.0
        return float(max(np.max(self.l_hi - self.l_lo), np.max(self.r_hi - self.r_lo)))


def root_generation(consts: RenormConstants) -> Generation:
    one = np.ones(1)
    ai = consts.alpha_inv
    return Generation(0, np.array([ai.lo]), np.array([ai.hi]), one.copy(), one.copy(),
                      one.copy(), one.copy(), one.copy(), one.copy())


# ---------------------------------------------------------------------------
# the two maps
# ---------------------------------------------------------------------------

def _abs_alpha_inv(consts):
    return -consts.alpha_inv.hi, -consts.alpha_inv.lo


def psi0(X, consts: RenormConstants):
    return consts.alpha_inv * X


def psi0_deriv(consts: RenormConstants) -> Interval:
    """|Psi0'|, a constant."""
    return Interval(*_abs_alpha_inv(consts))


def _psi1_bounds(xlo, xhi, ball, cert, consts, tol):
    ai = consts.alpha_inv
    ylo, yhi = fast_mul_bounds(ai.lo, ai.hi, xlo, xhi)
    return invert_bounds(ball, cert, ylo, yhi, tol)


def _abs_psi1_deriv_at(a, b, ball, consts):
    """|Psi1'| = |1/alpha| / |g'(X)| for X = [a, b] the image enclosure."""
    gp = ball.eval_deriv(IntervalArray(a, b, check=False))
    if not np.all(gp.hi < 0):
        raise ContractionViolation("g' enclosure at an image endpoint is not negative")
    m_lo, m_hi = _abs_alpha_inv(consts)
    with np.errstate(all="ignore"):
        lo = _down(m_lo / -gp.lo)
        hi = _up(m_hi / -gp.hi)
    return lo, hi


def psi1(X, ball: FunctionBall, cert: MonotonicityCertificate, tol: float = DEFAULT_TOL):
    """g^{-1}(X/alpha) enclosure (scalar Interval or IntervalArray)."""
    consts = cert.constants()
    xlo = np.atleast_1d(np.asarray(X.lo, dtype=np.float64))
    xhi = np.atleast_1d(np.asarray(X.hi, dtype=np.float64))
    a, b = _psi1_bounds(xlo, xhi, ball, cert, consts, tol)
    if isinstance(X, IntervalArray):
        return IntervalArray(a, b, check=False)
    return Interval(float(a[0]), float(b[0]))


def psi1_deriv(x, ball: FunctionBall, cert: MonotonicityCertificate,
               tol: float = DEFAULT_TOL):
    """|Psi1'(x)| = |1/alpha| / |g'(Psi1(x))|, positive."""
    consts = cert.constants()
    X = psi1(x, ball, cert, tol)
    a = np.atleast_1d(np.asarray(X.lo))
    b = np.atleast_1d(np.asarray(X.hi))
    lo, hi = _abs_psi1_deriv_at(a, b, ball, consts)
    if isinstance(x, IntervalArray):
        return IntervalArray(lo, hi, check=False)
    return Interval(float(lo[0]), float(hi[0]))


def panel_enclosure(which: str, X: IntervalArray, ball, cert) -> IntervalArray:
    """Enclosures of Psi0, Psi1 and their (signed) derivatives over grid cells X."""
    consts = cert.constants()
    ai = consts.alpha_inv
    n = len(X)
    if which == "psi0":
        return psi0(X, consts)
    if which == "psi0'":
        return IntervalArray(np.full(n, ai.lo), np.full(n, ai.hi))
    # Psi1 increasing; Psi1' decreasing on I (certificate chain)
    left = psi1(IntervalArray(X.lo, X.lo), ball, cert)
    right = psi1(IntervalArray(X.hi, X.hi), ball, cert)
    if which == "psi1":
        return IntervalArray(left.lo, right.hi)
    if which == "psi1'":
        dl = psi1_deriv(IntervalArray(X.lo, X.lo), ball, cert)
        dr = psi1_deriv(IntervalArray(X.hi, X.hi), ball, cert)
        return IntervalArray(np.minimum(dl.lo, dr.lo), np.maximum(dl.hi, dr.hi))
    raise ValueError(f"unknown panel {which!r}")


# ---------------------------------------------------------------------------
# generations
# ---------------------------------------------------------------------------

def _chunked(fn, n, threads):
    """Apply fn(slice) over chunks; results concatenated in order."""
    slices = [slice(i, min(i + CHUNK, n)) for i in range(0, n, CHUNK)] or [slice(0, 0)]
    if threads <= 1 or len(slices) == 1:
        parts = [fn(s) for s in slices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(fn, slices))
    return [np.concatenate([p[k] for p in parts]) for k in range(len(parts[0]))]


def expand_generation(gen: Generation, ball: FunctionBall, cert: MonotonicityCertificate,
                      consts: RenormConstants, *, tol: float = DEFAULT_TOL,
                      threads: int = 1) -> Generation:
    """Children Psi0(I_sigma) (first half) and Psi1(I_sigma) (second half)."""
    ai = consts.alpha_inv
    m_lo, m_hi = _abs_alpha_inv(consts)
    # Psi0 reverses: new left is the image of the old right
    p0_llo, p0_lhi = fast_mul_bounds(ai.lo, ai.hi, gen.r_lo, gen.r_hi)
    p0_rlo, p0_rhi = fast_mul_bounds(ai.lo, ai.hi, gen.l_lo, gen.l_hi)
    p0_dl = fast_mul_bounds(m_lo, m_hi, gen.dr_lo, gen.dr_hi)
    p0_dr = fast_mul_bounds(m_lo, m_hi, gen.dl_lo, gen.dl_hi)

    def work(s):
        la, lb = _psi1_bounds(gen.l_lo[s], gen.l_hi[s], ball, cert, consts, tol)
        ra, rb = _psi1_bounds(gen.r_lo[s], gen.r_hi[s], ball, cert, consts, tol)
        fl = _abs_psi1_deriv_at(la, lb, ball, consts)
        fr = _abs_psi1_deriv_at(ra, rb, ball, consts)
        dl = fast_mul_bounds(fl[0], fl[1], gen.dl_lo[s], gen.dl_hi[s])
        dr = fast_mul_bounds(fr[0], fr[1], gen.dr_lo[s], gen.dr_hi[s])
        return la, lb, ra, rb, dl[0], dl[1], dr[0], dr[1]

    la, lb, ra, rb, dllo, dlhi, drlo, drhi = _chunked(work, len(gen), threads)
    cat = np.concatenate
    new = Generation(gen.n + 1,
                     cat([p0_llo, la]), cat([p0_lhi, lb]), cat([p0_rlo, ra]), cat([p0_rhi, rb]),
                     cat([p0_dl[0], dllo]), cat([p0_dl[1], dlhi]),
                     cat([p0_dr[0], drlo]), cat([p0_dr[1], drhi]))
    # deep nodes are shorter than the enclosure width, so the enclosures may
    # overlap; only a provably reversed pair is an error
    bad = ~(new.l_lo <= new.r_hi)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NodeOrderViolation(
            f"node {SymbolSequence.from_index(i, new.n)}: left endpoint enclosure "
            f"[{new.l_lo[i]!r}, {new.l_hi[i]!r}] lies right of [{new.r_lo[i]!r}, {new.r_hi[i]!r}]")
    return new


def contraction_bounds(node: IFSNode) -> ContractionBounds:
    dl, dr = node.deriv_left, node.deriv_right
    c = Interval(max(dl.lo, dr.lo), max(dl.hi, dr.hi))
    d = Interval(min(dl.lo, dr.lo), min(dl.hi, dr.hi))
    if not (d.lo > 0 and c.hi < 1):
        raise ContractionViolation(
            f"node {node.sigma}: bounds d={d.lo!r}, c={c.hi!r} violate 0 < d <= c < 1")
    return ContractionBounds(c, d)


def contraction_arrays(gen: Generation):
    """Vector form of :func:`contraction_bounds`: (c upper bounds, d lower bounds)."""
    c = np.maximum(gen.dl_hi, gen.dr_hi)
    d = np.minimum(gen.dl_lo, gen.dr_lo)
    bad = ~((d > 0) & (c < 1))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise ContractionViolation(
            f"node {SymbolSequence.from_index(i, gen.n)}: d={d[i]!r}, c={c[i]!r} "
            "violate 0 < d <= c < 1")
    return c, d


# ---------------------------------------------------------------------------
# partition equations
# ---------------------------------------------------------------------------

class _PartitionSide:
    """Rigorous one-sided sums sum v**s for a fixed array of values in (0, 1)."""

    def __init__(self, values, side):
        self.side = side
        v = np.asarray(values, dtype=np.float64)
        lo, hi = _log_point_bounds(v)
        # upper side needs upper bounds of log v, lower side lower bounds
        self.logs = hi if side == "upper" else lo
        self.float_logs = np.log(v)

    def rigorous(self, s: float) -> float:
        if self.side == "upper":
            _, e = _exp_point_bounds(mul_ru(s, self.logs))
            return tree_sum(e, add_ru)
        e, _ = _exp_point_bounds(mul_rd(s, self.logs))
        return tree_sum(e, add_rd)

    def ok(self, s: float) -> bool:
        """upper: sum hi <= 1 (s is above the root); lower: sum lo >= 1."""
        val = self.rigorous(s)
        return val <= 1.0 if self.side == "upper" else val >= 1.0

    def estimate(self) -> float:
        # Newton on the convex decreasing f(s) = sum exp(s log v) - 1, from the left
        lg = self.float_logs
        s = 0.0
        for _ in range(100):
            e = np.exp(s * lg)
            f = e.sum() - 1.0
            fp = (e * lg).sum()
            if fp >= 0:
                break
            step = f / fp
            s_new = min(max(s - step, 0.0), 2.0)
            if abs(s_new - s) <= 1e-16:
                s = s_new
                break
            s = s_new
        return s


def _coerce_values(values, side):
    if isinstance(values, IntervalArray):
        return values.hi if side == "upper" else values.lo
    if isinstance(values, Interval):
        values = [values]
    if len(values) and isinstance(values[0], Interval):
        return np.array([v.hi if side == "upper" else v.lo for v in values])
    return np.asarray(values, dtype=np.float64)


def solve_partition(values, side: str, tol: float = DEFAULT_PARTITION_TOL) -> float:
    """Rigorous bound for the root of sum v**s = 1.

    ``side='upper'`` uses the upper endpoints and returns s with the rounded-up
    sum <= 1; ``side='lower'`` uses the lower endpoints and returns r with the
    rounded-down sum >= 1.  The bisection bracket on [0, 2] is seeded around a
    floating-point root estimate and shrunk until its width is <= ``tol``.
    """
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    v = _coerce_values(values, side)
    if v.size == 0:
        raise NoRoot("empty value list")
    if not np.all((v > 0) & (v < 1)):
        raise NoRoot("partition values must lie strictly inside (0, 1)")
    if tol < 4 * np.spacing(2.0):
        raise ToleranceFloor(f"tol {tol!r} is below the resolution of s near 2")
    ps = _PartitionSide(v, side)
    upper = side == "upper"
    # 'good' is the returned side, 'bad' the other end of the bracket
    lo_end, hi_end = 0.0, 2.0
    if upper:
        if not ps.ok(hi_end):
            raise NoRoot("sum still exceeds 1 at s = 2")
        good, bad = hi_end, lo_end
    else:
        if not ps.ok(lo_end):
            raise NoRoot("sum is below 1 at s = 0")
        if ps.ok(hi_end):
            raise NoRoot("sum still at least 1 at s = 2")
        good, bad = lo_end, hi_end
    # seed: tighten the bracket around the float estimate, widening on failure
    est = ps.estimate()
    step = tol / 4
    direction = 1.0 if upper else -1.0
    for _ in range(60):
        cand = est + direction * step
        if not (min(good, bad) < cand < max(good, bad)):
            break
        if ps.ok(cand):
            good = cand
            break
        bad = cand
        step *= 4
    step = tol / 4
    for _ in range(60):
        cand = est - direction * step
        if not (min(good, bad) < cand < max(good, bad)):
            break
        if not ps.ok(cand):
            bad = cand
            break
        good = cand
        step *= 4
    while abs(good - bad) > tol:
        mid = 0.5 * (good + bad)
        if mid in (good, bad):
            raise ToleranceFloor("bracket cannot shrink further in double precision")
        if ps.ok(mid):
            good = mid
        else:
            bad = mid
    return good


def partition_sum(values, s: float, side: str) -> float:
    """The rigorous one-sided sum used by :func:`solve_partition` (for checks)."""
    return _PartitionSide(_coerce_values(values, side), side).rigorous(s)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def dimension_run(degree_d: int, generations: int, ball: FunctionBall,
                  cert: MonotonicityCertificate, consts: RenormConstants | None = None, *,
                  threads: int = 1, inverse_tol: float = DEFAULT_TOL,
                  partition_tol: float = DEFAULT_PARTITION_TOL,
                  width_limit: float = DEFAULT_WIDTH_LIMIT, on_generation=None):
    """Brackets [r_n, s_n] for n = 1..generations.

    ``on_generation`` is called with each :class:`DimensionBounds` as soon as
    it is known.  On a width or contraction failure the exception carries the
    rows computed so far in its ``partial`` attribute.
    """
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if ball.degree_d != degree_d or cert.degree_d != degree_d:
        raise CertificateError("degree mismatch between request, ball and certificate")
    cert.check_ball(ball)
    if consts is None:
        consts = cert.constants()
    results = []
    gen = root_generation(consts)
    try:
        for n in range(1, generations + 1):
            t0 = time.perf_counter()
            gen = expand_generation(gen, ball, cert, consts, tol=inverse_tol, threads=threads)
            width = gen.max_width
            if width > width_limit:
                raise WidthAbort(
                    f"generation {n}: endpoint enclosure width {width:.3e} exceeds "
                    f"{width_limit:.1e}")
            c, d = contraction_arrays(gen)
            s = solve_partition(c, "upper", partition_tol)
            r = solve_partition(d, "lower", partition_tol)
            if r > s:
                raise FeigdimError(f"generation {n}: lower bound {r!r} above upper {s!r}")
            row = DimensionBounds(n, r, s, len(gen), width, time.perf_counter() - t0)
            results.append(row)
            if on_generation is not None:
                on_generation(row)
    except (WidthAbort, ContractionViolation, NodeOrderViolation) as exc:
        exc.partial = results
        raise
    return results
