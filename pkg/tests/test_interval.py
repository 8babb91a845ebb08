import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feigdim.errors import DivisionByZeroInterval, DomainError, IntervalOverflow
from feigdim.interval import (
    Interval,
    IntervalArray,
    add_rd,
    add_ru,
    format_outward,
    iexp,
    ilog,
    interval_sum,
    pow_int,
    pow_real,
    tree_sum,
)

mpmath.mp.prec = 200


def ulp(x):
    return math.ulp(x)


# -- worked examples --------------------------------------------------------

def test_add_exact():
    assert Interval(1, 2) + Interval(3, 4) == Interval(4, 6)


def test_mul_sign_cases():
    assert Interval(-1, 2) * Interval(3, 4) == Interval(-4, 8)


def test_div_third_has_width():
    r = Interval(1, 1) / Interval(3, 3)
    assert r.lo < r.hi
    assert Fraction(r.lo) < Fraction(1, 3) < Fraction(r.hi)


def test_div_by_zero_interval():
    with pytest.raises(DivisionByZeroInterval):
        Interval(1, 1) / Interval(-1, 1)


def test_overflow_is_error():
    with pytest.raises(IntervalOverflow):
        Interval(1e308, 1e308) * Interval(10, 10)


def test_pow_int_examples():
    assert pow_int(Interval(-2, 1), 2) == Interval(0, 4)
    assert pow_int(Interval(2, 2), 10) == Interval(1024, 1024)
    for X in (Interval(-3, 5), Interval(0.1, 0.2), Interval(-7, -6)):
        assert pow_int(X, 0) == Interval(1, 1)


def test_pow_int_odd_negative():
    r = pow_int(Interval(-2, 3), 3)
    assert r.contains(-8) and r.contains(27)


def test_pow_real_sqrt():
    r = pow_real(Interval(4, 4), Interval(0.5, 0.5))
    assert r.contains(2.0)
    assert r.hi - r.lo <= 4 * ulp(2.0)


def test_pow_real_identity_base():
    for s in (Interval(-3, 2), Interval(0.63, 0.64), Interval(0, 0)):
        assert pow_real(Interval(1, 1), s).contains(1.0)


def test_pow_real_high_precision_oracle():
    s = Interval.from_value("0.6309297")
    s = s.hull(Interval.from_value("0.6309298"))
    r = pow_real(Interval(0.5, 0.5), s)
    lo = mpmath.mpf(0.5) ** mpmath.mpf("0.6309298")
    hi = mpmath.mpf(0.5) ** mpmath.mpf("0.6309297")
    assert mpmath.mpf(r.lo) <= lo and hi <= mpmath.mpf(r.hi)
    assert r.width() < 1e-6


def test_hull_split_contains():
    assert Interval(0, 1).hull(Interval(2, 3)) == Interval(0, 3)
    assert Interval(0, 1).split() == (Interval(0, 0.5), Interval(0.5, 1))
    assert Interval(0.53, 0.54).contains(0.538045)


def test_format_outward_examples():
    third = Interval(1, 1) / Interval(3, 3)
    assert format_outward(third, 4) == ("0.3333", "0.3334")
    assert format_outward(Interval(2, 2), 3) == ("2.00", "2.00")


def test_format_outward_decimal_oracle():
    x = Interval.from_value("0.53804514")
    lo, hi = format_outward(x, 6)
    assert Fraction(lo) <= Fraction("0.538045")
    assert Fraction(hi) >= Fraction("0.538046")
    assert Fraction(lo) <= Fraction(x.lo) and Fraction(x.hi) <= Fraction(hi)


def test_format_outward_tiny_values_use_exponent():
    lo, hi = format_outward(Interval(-1e-300, 5e-320), 4)
    assert "e" in lo and "e" in hi
    assert Fraction(lo) <= Fraction(-1e-300) and Fraction(hi) >= Fraction(5e-320)


@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(0, 1e3), st.integers(1, 17))
def test_format_outward_encloses(x, w, digits):
    X = Interval(x, x + w)
    lo, hi = format_outward(X, digits)
    assert Fraction(lo) <= Fraction(X.lo)
    assert Fraction(hi) >= Fraction(X.hi)


# -- containment fuzz against exact rationals ---------------------------------

def _random_intervals(rng, n):
    mant = rng.integers(-2**20, 2**20, size=(n, 2)).astype(np.float64)
    scale = np.ldexp(1.0, rng.integers(-30, 10, size=(n, 1)))
    v = mant * scale
    lo = np.minimum(v[:, 0], v[:, 1])
    hi = np.maximum(v[:, 0], v[:, 1])
    # point inside, dyadic by construction
    t = rng.integers(0, 2**10 + 1, size=n) / 2**10
    pt = np.clip(lo + (hi - lo) * t, lo, hi)
    return lo, hi, pt


def _random_full_precision(rng, n):
    lo = rng.standard_normal(n) * np.exp(rng.uniform(-20, 20, n))
    hi = lo + np.abs(rng.standard_normal(n)) * np.exp(rng.uniform(-30, 5, n))
    pt = np.clip(lo + (hi - lo) * rng.uniform(0, 1, n), lo, hi)
    return lo, hi, pt


OPS = {
    "add": (lambda a, b: a + b, lambda x, y: x + y),
    "sub": (lambda a, b: a - b, lambda x, y: x - y),
    "mul": (lambda a, b: a * b, lambda x, y: x * y),
    "div": (lambda a, b: a / b, lambda x, y: x / y),
}


def test_containment_fuzz_1e5():
    """10^5 random (op, X, Y) triples; the exact rational result must be enclosed."""
    rng = np.random.default_rng(20240601)
    per_op = 25_000
    violations = 0
    for k, (name, (iop, fop)) in enumerate(OPS.items()):
        gen = _random_intervals if k % 2 == 0 else _random_full_precision
        alo, ahi, x = gen(rng, per_op)
        blo, bhi, y = gen(rng, per_op)
        if name == "div":
            keep = (blo > 0) | (bhi < 0)
            alo, ahi, x, blo, bhi, y = (v[keep] for v in (alo, ahi, x, blo, bhi, y))
        R = iop(IntervalArray(alo, ahi), IntervalArray(blo, bhi))
        for i in range(len(alo)):
            exact = fop(Fraction(x[i]), Fraction(y[i]))
            if not Fraction(R.lo[i]) <= exact <= Fraction(R.hi[i]):
                violations += 1
    assert violations == 0


@settings(max_examples=300)
@given(st.floats(-1e3, 1e3), st.floats(0, 10), st.floats(0, 1))
def test_neg_abs_contain(x, w, t):
    X = Interval(x, x + w)
    p = min(max(x + w * t, X.lo), X.hi)
    assert (-X).contains(-p)
    assert abs(X).contains(abs(p))


@settings(max_examples=300)
@given(st.floats(-100, 100), st.floats(0, 5), st.floats(0, 5),
       st.floats(-100, 100), st.floats(0, 5), st.floats(0, 5))
def test_inclusion_monotone(a, w, e, b, v, f):
    X, Xp = Interval(a, a + w), Interval(a - e, a + w + e)
    Y, Yp = Interval(b, b + v), Interval(b - f, b + v + f)
    for op in ("add", "sub", "mul"):
        fn = OPS[op][0]
        assert fn(X, Y).is_subset(fn(Xp, Yp))
    if Yp.lo > 0 or Yp.hi < 0:
        assert (X / Y).is_subset(Xp / Yp)


def test_determinism_bit_identical():
    rng = np.random.default_rng(7)
    lo, hi, _ = _random_full_precision(rng, 1000)
    A = IntervalArray(lo, hi)
    B = IntervalArray(np.abs(hi) + 1, np.abs(hi) + 2)
    r1 = (A * B + A) / B
    r2 = (A * B + A) / B
    assert np.array_equal(r1.lo, r2.lo) and np.array_equal(r1.hi, r2.hi)
    scalar = [(Interval(lo[i], hi[i]) * Interval(B.lo[i], B.hi[i])) for i in range(50)]
    assert all(s.lo == r.lo and s.hi == r.hi for s, r in
               zip(scalar, (A * B).to_list()[:50]))


# -- transcendental kernels ----------------------------------------------------

def test_exp_log_against_mpmath():
    rng = np.random.default_rng(3)
    xs = np.concatenate([rng.uniform(-700, 700, 2000), rng.uniform(-1, 1, 2000),
                         [0.0, 1.0, -1.0, 1e-300, -1e-300]])
    E = iexp(IntervalArray(xs, xs))
    for x, lo, hi in zip(xs, E.lo, E.hi):
        ex = mpmath.exp(mpmath.mpf(x))
        assert mpmath.mpf(lo) <= ex <= mpmath.mpf(hi)
    ys = np.concatenate([np.exp(rng.uniform(-700, 700, 2000)), rng.uniform(0.5, 2, 2000),
                         [1.0, 2.0, 5e-324, 1.7e308]])
    L = ilog(IntervalArray(ys, ys))
    for y, lo, hi in zip(ys, L.lo, L.hi):
        ly = mpmath.log(mpmath.mpf(y))
        assert mpmath.mpf(lo) <= ly <= mpmath.mpf(hi)


def test_exp_log_tight():
    e = iexp(Interval(1, 1))
    assert e.width() <= 8 * ulp(math.e)
    assert iexp(Interval(0, 0)) == Interval(1, 1)
    assert ilog(Interval(1, 1)) == Interval(0, 0)


def test_log_domain():
    with pytest.raises(DomainError):
        ilog(Interval(-1, 2))
    with pytest.raises(DomainError):
        pow_real(Interval(0, 1), 0.5)


@settings(max_examples=200)
@given(st.floats(0.01, 100), st.floats(0, 1), st.floats(0.01, 100), st.floats(-3, 3))
def test_pow_real_hull_monotone(a, w, b, s):
    X = Interval(a, a + w)
    Xp = Interval(b, b)
    S = Interval(s, s)
    assert pow_real(X, S).is_subset(pow_real(X.hull(Xp), S))


# -- summation -----------------------------------------------------------------

def test_tree_sum_directed_and_order_free():
    rng = np.random.default_rng(11)
    v = rng.uniform(0, 1, 1025) * np.exp(rng.uniform(-30, 0, 1025))
    exact = sum(Fraction(x) for x in v)
    lo, hi = tree_sum(v, add_rd), tree_sum(v, add_ru)
    assert Fraction(lo) <= exact <= Fraction(hi)
    s = interval_sum(IntervalArray(v, v))
    assert Fraction(s.lo) <= exact <= Fraction(s.hi)
    # same values, produced by a different route, give bit-identical sums
    w = np.concatenate([v[:500], v[500:]])
    assert tree_sum(w, add_ru) == hi
