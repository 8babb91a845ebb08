"""Outward-rounded interval arithmetic on binary64 endpoints.

Two containers share one set of kernels:

* :class:`Interval` -- a single closed interval ``[lo, hi]`` with float endpoints.
* :class:`IntervalArray` -- a vector of intervals stored as two numpy arrays,
  used wherever thousands of enclosures are processed at once.

Directed rounding is emulated without touching the FPU rounding mode.  For
``+ - * /`` an error-free transformation (TwoSum, Dekker's TwoProduct) tells
whether the round-to-nearest result is exact and, if not, on which side the
true value lies; only then is the endpoint moved one ulp outward.  Exact
dyadic computations therefore stay exact (``[1,2] + [3,4] == [4,6]``).

``exp`` and ``log`` are evaluated by argument reduction and a short series
whose every operation is itself interval arithmetic, plus an explicit bound
on the truncated tail, so no libm accuracy claim is relied upon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DivisionByZeroInterval, DomainError, IntervalOverflow

_INF = np.inf
_SPLITTER = 134217729.0  # 2**27 + 1
_SPLIT_LIMIT = 2.0**995
_TINY = 2.0**-960  # below this an exact product/quotient error may underflow


# ---------------------------------------------------------------------------
# rounding kernels (work on numpy arrays and numpy/python scalars alike)
# ---------------------------------------------------------------------------

def _down(x):
    return np.nextafter(x, -_INF)


def _up(x):
    return np.nextafter(x, _INF)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _finite(x):
    return np.isfinite(x)


def add_rd(a, b):
    with np.errstate(all="ignore"):
        s, e = _two_sum(a, b)
        return np.where((e < 0) | ~_finite(e), _down(s), s)


def add_ru(a, b):
    with np.errstate(all="ignore"):
        s, e = _two_sum(a, b)
        return np.where((e > 0) | ~_finite(e), _up(s), s)


def _mul_suspect(a, b, p, e):
    big = (np.abs(a) > _SPLIT_LIMIT) | (np.abs(b) > _SPLIT_LIMIT)
    tiny = (np.abs(p) < _TINY) & (a != 0) & (b != 0)
    return big | tiny | ~_finite(e)


def mul_rd(a, b):
    with np.errstate(all="ignore"):
        p, e = _two_prod(a, b)
        return np.where((e < 0) | _mul_suspect(a, b, p, e), _down(p), p)


def mul_ru(a, b):
    with np.errstate(all="ignore"):
        p, e = _two_prod(a, b)
        return np.where((e > 0) | _mul_suspect(a, b, p, e), _up(p), p)


def _div_residual(a, b):
    q = a / b
    p, e = _two_prod(q, b)
    rem = (a - p) - e  # exact a - q*b (Sterbenz), sign survives rounding
    direction = np.sign(rem) * np.sign(b)
    suspect = (
        ~_finite(e)
        | ((np.abs(q) < _TINY) & (a != 0))
        | (np.abs(q) > _SPLIT_LIMIT)
        | (np.abs(b) > _SPLIT_LIMIT)
        | ((np.abs(a) < _TINY) & (a != 0))
    )
    return q, direction, suspect


def div_rd(a, b):
    with np.errstate(all="ignore"):
        q, direction, suspect = _div_residual(a, b)
        return np.where((direction < 0) | suspect, _down(q), q)


def div_ru(a, b):
    with np.errstate(all="ignore"):
        q, direction, suspect = _div_residual(a, b)
        return np.where((direction > 0) | suspect, _up(q), q)


# cheap variants for hot loops: always widen by one ulp
def fast_mul_bounds(alo, ahi, blo, bhi):
    """Enclosure of [alo,ahi]*[blo,bhi], widening every product by one ulp."""
    with np.errstate(all="ignore"):
        p1 = alo * blo
        p2 = alo * bhi
        p3 = ahi * blo
        p4 = ahi * bhi
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return _down(lo), _up(hi)


def fast_add_bounds(alo, ahi, blo, bhi):
    return _down(alo + blo), _up(ahi + bhi)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def _float_bounds(value) -> tuple[float, float]:
    """Tightest float pair enclosing an exact real constant."""
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v, v
    if isinstance(value, str):
        value = Fraction(Decimal(value))
    elif isinstance(value, Decimal):
        value = Fraction(value)
    elif isinstance(value, (int, np.integer)):
        value = Fraction(int(value))
    if not isinstance(value, Fraction):
        raise TypeError(f"cannot build an interval from {type(value).__name__}")
    try:
        f = float(value)
    except OverflowError:
        raise IntervalOverflow(f"constant {value} exceeds the double range") from None
    exact = Fraction(f)
    if exact == value:
        return f, f
    if exact < value:
        return f, math.nextafter(f, math.inf)
    return math.nextafter(f, -math.inf), f


# ---------------------------------------------------------------------------
# interval containers
# ---------------------------------------------------------------------------

Number = Union[int, float, Fraction, Decimal, str]


class _IntervalOps:
    """Arithmetic shared by the scalar and the vector interval types."""

    lo: object
    hi: object

    # result construction is type specific
    def _new(self, lo, hi, other=None):
        if isinstance(self, IntervalArray) or isinstance(other, IntervalArray):
            return IntervalArray(lo, hi)
        return Interval(float(lo), float(hi))

    @staticmethod
    def _parts(other):
        if isinstance(other, (Interval, IntervalArray)):
            return other.lo, other.hi
        lo, hi = _float_bounds(other)
        return lo, hi

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        blo, bhi = self._parts(other)
        return self._new(add_rd(self.lo, blo), add_ru(self.hi, bhi), other)

    __radd__ = __add__

    def __sub__(self, other):
        blo, bhi = self._parts(other)
        return self._new(add_rd(self.lo, -bhi), add_ru(self.hi, -blo), other)

    def __rsub__(self, other):
        alo, ahi = self._parts(other)
        return self._new(add_rd(alo, -self.hi), add_ru(ahi, -self.lo), other)

    def __neg__(self):
        return self._new(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __mul__(self, other):
        blo, bhi = self._parts(other)
        a, b, c, d = self.lo, self.hi, blo, bhi
        lo = np.minimum(np.minimum(mul_rd(a, c), mul_rd(a, d)),
                        np.minimum(mul_rd(b, c), mul_rd(b, d)))
        hi = np.maximum(np.maximum(mul_ru(a, c), mul_ru(a, d)),
                        np.maximum(mul_ru(b, c), mul_ru(b, d)))
        return self._new(lo, hi, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        blo, bhi = self._parts(other)
        return _divide(self, self.lo, self.hi, blo, bhi, other)

    def __rtruediv__(self, other):
        alo, ahi = self._parts(other)
        return _divide(self, alo, ahi, self.lo, self.hi, other)

    def __abs__(self):
        lo, hi = self.lo, self.hi
        new_lo = np.where(lo >= 0, lo, np.where(hi <= 0, -hi, 0.0))
        new_hi = np.maximum(np.abs(lo), np.abs(hi))
        return self._new(new_lo, new_hi)

    def __pow__(self, k):
        if isinstance(k, (int, np.integer)):
            return pow_int(self, int(k))
        return pow_real(self, k)

    def reciprocal(self):
        return 1 / self

    def scale(self, factor: float):
        """Multiply by an exact float."""
        return self * float(factor)

    # -- set operations ---------------------------------------------------
    def hull(self, other):
        blo, bhi = self._parts(other)
        return self._new(np.minimum(self.lo, blo), np.maximum(self.hi, bhi), other)

    def width(self):
        """Width rounded upward."""
        w = add_ru(self.hi, -self.lo)
        return float(w) if isinstance(self, Interval) else w

    def midpoint(self):
        with np.errstate(all="ignore"):
            m = 0.5 * self.lo + 0.5 * self.hi
        return float(m) if isinstance(self, Interval) else m

    def mag(self):
        m = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return float(m) if isinstance(self, Interval) else m

    def mig(self):
        m = np.where((self.lo <= 0) & (self.hi >= 0), 0.0,
                     np.minimum(np.abs(self.lo), np.abs(self.hi)))
        return float(m) if isinstance(self, Interval) else m

    # -- transcendental ---------------------------------------------------
    def exp(self):
        return iexp(self)

    def log(self):
        return ilog(self)


def _divide(ref, alo, ahi, blo, bhi, other):
    if np.any((blo <= 0) & (bhi >= 0)):
        raise DivisionByZeroInterval("divisor interval contains zero")
    lo = np.minimum(np.minimum(div_rd(alo, blo), div_rd(alo, bhi)),
                    np.minimum(div_rd(ahi, blo), div_rd(ahi, bhi)))
    hi = np.maximum(np.maximum(div_ru(alo, blo), div_ru(alo, bhi)),
                    np.maximum(div_ru(ahi, blo), div_ru(ahi, bhi)))
    return ref._new(lo, hi, other)


@dataclass(frozen=True, eq=True)
class Interval(_IntervalOps):
    """Closed interval ``[lo, hi]`` of doubles; both endpoints finite."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN endpoint")
        if math.isinf(lo) or math.isinf(hi):
            raise IntervalOverflow(f"endpoint overflow in [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"empty interval [{lo!r}, {hi!r}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(float(x), float(x))

    @classmethod
    def from_value(cls, value: Number) -> "Interval":
        """Enclosure of an exact constant (decimal strings and Fractions are exact)."""
        return cls(*_float_bounds(value))

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __iter__(self):
        yield self.lo
        yield self.hi

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, (float, int, np.floating, np.integer)):
            return self.lo <= x <= self.hi
        q = Fraction(Decimal(x)) if isinstance(x, str) else Fraction(x)
        return Fraction(self.lo) <= q <= Fraction(self.hi)

    __contains__ = contains

    def is_subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def overlaps(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "Interval"):
        """Intersection, or ``None`` when the two are disjoint."""
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def split(self) -> tuple["Interval", "Interval"]:
        m = self.midpoint()
        if not (self.lo <= m <= self.hi):
            m = self.lo
        return Interval(self.lo, m), Interval(m, self.hi)

    def is_point(self) -> bool:
        return self.lo == self.hi


class IntervalArray(_IntervalOps):
    """A vector of intervals backed by two float64 arrays."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None, *, check=True):
        lo = np.asarray(lo, dtype=np.float64)
        hi = lo if hi is None else np.asarray(hi, dtype=np.float64)
        lo, hi = np.broadcast_arrays(lo, hi)
        if check:
            if np.isnan(lo).any() or np.isnan(hi).any():
                raise ValueError("NaN endpoint")
            if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
                raise IntervalOverflow("endpoint overflow")
            if (lo > hi).any():
                raise ValueError("empty interval in array")
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_intervals(cls, items: Iterable[Interval]) -> "IntervalArray":
        items = list(items)
        return cls([x.lo for x in items], [x.hi for x in items])

    @classmethod
    def points(cls, xs) -> "IntervalArray":
        xs = np.asarray(xs, dtype=np.float64)
        return cls(xs, xs.copy())

    @classmethod
    def concat(cls, parts: Sequence["IntervalArray"]) -> "IntervalArray":
        return cls(np.concatenate([p.lo for p in parts]),
                   np.concatenate([p.hi for p in parts]), check=False)

    def __len__(self):
        return self.lo.shape[0]

    @property
    def shape(self):
        return self.lo.shape

    def __getitem__(self, idx):
        lo, hi = self.lo[idx], self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IntervalArray(lo, hi, check=False)

    def __iter__(self):
        for lo, hi in zip(self.lo.tolist(), self.hi.tolist()):
            yield Interval(lo, hi)

    def __repr__(self):
        return f"IntervalArray(n={self.lo.size})"

    def contains(self, x):
        if isinstance(x, (Interval, IntervalArray)):
            return (self.lo <= x.lo) & (x.hi <= self.hi)
        return (self.lo <= x) & (x <= self.hi)

    def overlaps(self, other):
        return (self.lo <= other.hi) & (other.lo <= self.hi)

    def to_list(self) -> list[Interval]:
        return list(self)


# ---------------------------------------------------------------------------
# powers
# ---------------------------------------------------------------------------

def _pow_nonneg(x, k, rounder):
    """x**k for x >= 0 with every product rounded by ``rounder``."""
    result = np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    base = x
    while k:
        if k & 1:
            result = rounder(result, base)
        k >>= 1
        if k:
            base = rounder(base, base)
    return result


def pow_int(x, k: int):
    """Enclosure of ``{t**k : t in x}`` for a nonnegative integer ``k``."""
    if k < 0:
        raise ValueError("pow_int needs k >= 0")
    if k == 0:
        return x._new(np.ones_like(x.lo), np.ones_like(x.hi))
    if k == 1:
        return x
    if k % 2 == 0:
        a = abs(x)
        return x._new(_pow_nonneg(a.lo, k, mul_rd), _pow_nonneg(a.hi, k, mul_ru))
    lo, hi = x.lo, x.hi
    # odd power is increasing: t**k = sign(t)*|t|**k
    lo_pos = _pow_nonneg(np.abs(lo), k, mul_rd)
    lo_neg = -_pow_nonneg(np.abs(lo), k, mul_ru)
    hi_pos = _pow_nonneg(np.abs(hi), k, mul_ru)
    hi_neg = -_pow_nonneg(np.abs(hi), k, mul_rd)
    return x._new(np.where(lo >= 0, lo_pos, lo_neg), np.where(hi >= 0, hi_pos, hi_neg))


# ---------------------------------------------------------------------------
# exp / log with self-validating kernels
# ---------------------------------------------------------------------------

# ln 2 = 0.6931471805599453094172321214581765680755...
LN2_LO = float.fromhex("0x1.62e42fefa39efp-1")
LN2_HI = float.fromhex("0x1.62e42fefa39f0p-1")
# two-part split: k*_LN2_A is exact for |k| < 2**21, _LN2_B encloses the rest
_LN2_A = float.fromhex("0x1.62e42fee00000p-1")
_LN2_DEC = Fraction("0.6931471805599453094172321214581765680755")
_LN2_B_LO = _float_bounds(_LN2_DEC - Fraction(_LN2_A))[0]
_LN2_B_HI = _float_bounds(_LN2_DEC + Fraction(1, 10**40) - Fraction(_LN2_A))[1]

# Table-driven reduction keeps both series short:
#   exp(x) = 2**k * exp(j/32) * exp(t),       |t| <= 1/64
#   log(x) = e*ln2 + log(1 + j/32) + 2 atanh(z), |z| < 1/88
# Table entries are enclosed from exact rational series at import time.
_EXP_TERMS = 8
_LOG_TERMS = 5
_TAB = 32
_EXP_J = range(-12, 13)
_LOG_J = range(-10, 15)


def _const_bounds(fracs):
    lo, hi = zip(*(_float_bounds(f) for f in fracs))
    return np.array(lo), np.array(hi)


def _exp_rational(x: Fraction, terms: int = 40):
    s = Fraction(0)
    term = Fraction(1)
    for i in range(terms):
        s += term
        term = term * x / (i + 1)
    tail = abs(term) * 2  # |x| < 1 so the remainder is below twice the next term
    return s - tail, s + tail


def _log_rational(c: Fraction, terms: int = 40):
    z = (c - 1) / (c + 1)
    w = z * z
    s = Fraction(0)
    p = z
    for i in range(terms):
        s += p / (2 * i + 1)
        p *= w
    tail = abs(p) / (2 * terms + 1) / (1 - w)
    return 2 * (s - tail), 2 * (s + tail)


def _table(fn, js):
    lo, hi = [], []
    for j in js:
        a, b = fn(Fraction(j, _TAB))
        lo.append(_float_bounds(a)[0])
        hi.append(_float_bounds(b)[1])
    return np.array(lo), np.array(hi)


_EXP_TAB_LO, _EXP_TAB_HI = _table(_exp_rational, _EXP_J)
_LOG_TAB_LO, _LOG_TAB_HI = _table(lambda f: _log_rational(1 + f), _LOG_J)

_INV_FACT_LO, _INV_FACT_HI = _const_bounds(
    [Fraction(1, math.factorial(j)) for j in range(_EXP_TERMS)])
_INV_ODD_LO, _INV_ODD_HI = _const_bounds(
    [Fraction(1, 2 * j + 1) for j in range(_LOG_TERMS)])
# |t|**M/M! * e**|t| <= |t|**M * _EXP_TAIL_C for |t| <= 1/32
_EXP_TAIL_C = _float_bounds(Fraction(11, 10) / math.factorial(_EXP_TERMS))[1]


def _mul_pos(plo, phi, tlo, thi):
    """[plo,phi]*[tlo,thi] when plo > 0, widened by one ulp."""
    with np.errstate(all="ignore"):
        lo = np.minimum(plo * tlo, phi * tlo)
        hi = np.maximum(plo * thi, phi * thi)
    return _down(lo), _up(hi)


def _exp_point_bounds(x):
    """Lower and upper bounds of exp(x) for a float array ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x > 709.0):
        raise IntervalOverflow("exp argument too large")
    x = np.maximum(x, -800.0)
    k = np.rint(x / LN2_LO)
    # r = (x - k*A) - k*B with k*A exact and x - k*A exact (Sterbenz)
    ka = k * _LN2_A
    kb_lo, kb_hi = fast_mul_bounds(k, k, _LN2_B_LO, _LN2_B_HI)
    r1 = x - ka
    rlo = _down(r1 - kb_hi)
    rhi = _up(r1 - kb_lo)
    j = np.clip(np.rint(rlo * _TAB), _EXP_J[0], _EXP_J[-1])
    jf = j / _TAB
    tlo = add_rd(rlo, -jf)
    thi = add_ru(rhi, -jf)
    plo = np.full_like(x, _INV_FACT_LO[-1])
    phi = np.full_like(x, _INV_FACT_HI[-1])
    for i in range(_EXP_TERMS - 2, 0, -1):
        plo, phi = _mul_pos(plo, phi, tlo, thi)
        plo, phi = _down(plo + _INV_FACT_LO[i]), _up(phi + _INV_FACT_HI[i])
    plo, phi = _mul_pos(plo, phi, tlo, thi)
    tmag = np.maximum(np.abs(tlo), np.abs(thi))
    t2 = _up(tmag * tmag)
    t4 = _up(t2 * t2)
    tail = _up(_up(t4 * t4) * _EXP_TAIL_C)
    plo = add_rd(add_rd(plo, -tail), 1.0)
    phi = add_ru(add_ru(phi, tail), 1.0)
    idx = (j - _EXP_J[0]).astype(np.intp)
    lo = mul_rd(plo, _EXP_TAB_LO[idx])
    hi = mul_ru(phi, _EXP_TAB_HI[idx])
    ki = k.astype(np.int64)
    with np.errstate(all="ignore"):
        lo = np.ldexp(lo, ki)
        hi = np.ldexp(hi, ki)
    if not np.all(np.isfinite(hi)):
        raise IntervalOverflow("exp overflow")
    # ldexp into the subnormal range rounds; clamp rather than trust it
    lo = np.where(lo < 2.0**-1000, 0.0, lo)
    hi = np.where(hi < 2.0**-1000, 2.0**-1000, hi)
    zero = x == 0
    return np.where(zero, 1.0, lo), np.where(zero, 1.0, hi)


def _log_point_bounds(x):
    """Lower and upper bounds of log(x) for a positive float array ``x``."""
    x = np.asarray(x, dtype=np.float64)
    m, e = np.frexp(x)
    shift = m < 0.7071067811865476
    m = np.where(shift, 2.0 * m, m)
    e = np.where(shift, e - 1, e).astype(np.float64)
    j = np.rint((m - 1.0) * _TAB)
    c = 1.0 + j / _TAB
    num = m - c  # exact: m/c lies in [1/2, 2]
    den = m + c
    den_lo, den_hi = _down(den), _up(den)
    with np.errstate(all="ignore"):
        zlo = np.where(num >= 0, _down(num / den_hi), _down(num / den_lo))
        zhi = np.where(num >= 0, _up(num / den_lo), _up(num / den_hi))
    zlo = np.where(num == 0, 0.0, zlo)
    zhi = np.where(num == 0, 0.0, zhi)
    zmag = np.maximum(np.abs(zlo), np.abs(zhi))
    whi = _up(zmag * zmag)
    wlo = np.where(num == 0, 0.0, _down(np.minimum(zlo * zlo, zhi * zhi)))
    slo = np.full_like(x, _INV_ODD_LO[-1])
    shi = np.full_like(x, _INV_ODD_HI[-1])
    for i in range(_LOG_TERMS - 2, -1, -1):
        slo, shi = _mul_pos(slo, shi, wlo, whi)
        slo, shi = _down(slo + _INV_ODD_LO[i]), _up(shi + _INV_ODD_HI[i])
    n = 2 * _LOG_TERMS + 1
    zn = _pow_nonneg(zmag, n, lambda a, b: _up(a * b))
    tail = _up(zn / _down(n * _down(1.0 - whi)))
    # 2*z*S + 2*tail, S > 0
    with np.errstate(all="ignore"):
        tlo = np.minimum(zlo * slo, zlo * shi)
        thi = np.maximum(zhi * slo, zhi * shi)
    tlo = np.where(num == 0, 0.0, _down(tlo))
    thi = np.where(num == 0, 0.0, _up(thi))
    tlo = add_rd(2.0 * tlo, -2.0 * tail)
    thi = add_ru(2.0 * thi, 2.0 * tail)
    idx = (j - _LOG_J[0]).astype(np.intp)
    tlo = add_rd(tlo, _LOG_TAB_LO[idx])
    thi = add_ru(thi, _LOG_TAB_HI[idx])
    ea = e * _LN2_A  # exact
    eb_lo, eb_hi = fast_mul_bounds(e, e, _LN2_B_LO, _LN2_B_HI)
    eb_lo = np.where(e == 0, 0.0, eb_lo)
    eb_hi = np.where(e == 0, 0.0, eb_hi)
    lo = add_rd(add_rd(ea, eb_lo), tlo)
    hi = add_ru(add_ru(ea, eb_hi), thi)
    one = x == 1.0
    return np.where(one, 0.0, lo), np.where(one, 0.0, hi)


def iexp(x):
    """Enclosure of exp over an interval (exp is increasing)."""
    lo, _ = _exp_point_bounds(x.lo)
    _, hi = _exp_point_bounds(x.hi)
    return x._new(lo, hi)


def ilog(x):
    """Enclosure of log over a positive interval."""
    if np.any(np.asarray(x.lo) <= 0):
        raise DomainError("log of an interval reaching zero or below")
    lo, _ = _log_point_bounds(x.lo)
    _, hi = _log_point_bounds(x.hi)
    return x._new(lo, hi)


def pow_real(x, s):
    """Enclosure of ``{t**v : t in x, v in s}`` for ``x`` inside (0, inf)."""
    if not isinstance(s, (Interval, IntervalArray)):
        s = Interval.from_value(s)
    if np.any(np.asarray(x.lo) <= 0):
        raise DomainError("pow_real needs a strictly positive base")
    return iexp(s * ilog(x))


# ---------------------------------------------------------------------------
# summation and formatting
# ---------------------------------------------------------------------------

def tree_sum(values, add) -> float:
    """Sum with a fixed balanced pairing; ``add`` is add_rd or add_ru.

    The pairing depends only on the length, so the result does not depend on
    how the array was produced or chunked.
    """
    v = np.array(values, dtype=np.float64)
    if v.size == 0:
        return 0.0
    while v.size > 1:
        if v.size % 2:
            v = np.append(v, 0.0)
        v = add(v[0::2], v[1::2])
    return float(v[0])


def interval_sum(x: IntervalArray) -> Interval:
    """Outward-rounded sum over a fixed balanced tree."""
    return Interval(tree_sum(x.lo, add_rd), tree_sum(x.hi, add_ru))


def _decimal_round(value: float, digits: int, rounding) -> str:
    d = Decimal(value)
    if d == 0:
        return "0." + "0" * (digits - 1) if digits > 1 else "0"
    exponent = d.adjusted() - digits + 1
    q = d.quantize(Decimal(1).scaleb(exponent), rounding=rounding)
    # rounding may carry into a new decade (0.9999 -> 1.000); keep the digit count
    if q.adjusted() != d.adjusted():
        exponent = q.adjusted() - digits + 1
        q = d.quantize(Decimal(1).scaleb(exponent), rounding=rounding)
    # plain notation for ordinary magnitudes, exponent form otherwise
    if -6 <= q.adjusted() < 16:
        return format(q, "f")
    return format(q, "e")


def format_outward(x: Interval, digits: int) -> tuple[str, str]:
    """Decimal strings ``(lo, hi)`` with ``digits`` significant digits.

    ``lo`` is rounded toward -inf and ``hi`` toward +inf, so the printed pair
    encloses ``x``.
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    return (_decimal_round(x.lo, digits, ROUND_FLOOR),
            _decimal_round(x.hi, digits, ROUND_CEILING))


def hexf(x: float) -> str:
    return float(x).hex()
