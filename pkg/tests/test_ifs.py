import math

import mpmath
import numpy as np
import pytest

from feigdim import ifs
from feigdim.errors import CertificateError, ContractionViolation, NoRoot, WidthAbort
from feigdim.interval import Interval, IntervalArray
from feigdim.ifs import (
    IFSNode,
    SymbolSequence,
    contraction_bounds,
    dimension_run,
    expand_generation,
    partition_sum,
    psi0,
    psi0_deriv,
    psi1,
    psi1_deriv,
    root_generation,
    solve_partition,
)
from feigdim.monotonicity import orbit_enclosures

mpmath.mp.dps = 40


def generations(ball, cert, n, **kw):
    consts = cert.constants()
    gens = [root_generation(consts)]
    for _ in range(n):
        gens.append(expand_generation(gens[-1], ball, cert, consts, **kw))
    return gens


@pytest.fixture(scope="module")
def gens2(ball2, cert2):
    return generations(ball2, cert2, 10)


# -- the two maps ----------------------------------------------------------------

def test_psi0_examples(cert2):
    k = cert2.constants()
    r = psi0(Interval(1, 1), k)
    assert r == k.alpha_inv and abs(r.midpoint() + 0.4) < 1e-3
    assert psi0(Interval(0, 0), k) == Interval(0, 0)
    d = psi0_deriv(k)
    assert 0 < d.lo <= d.hi < 1


def test_psi1_examples(ball2, cert2):
    assert psi1(Interval(1, 1), ball2, cert2).contains(1.0)
    ai = cert2.alpha_inv
    x = psi1(Interval(ai.lo, ai.lo), ball2, cert2)
    assert abs(x.midpoint() - 0.76) < 0.01
    gg1 = ball2.eval(ball2.eval(Interval(1, 1)))
    assert psi1(ai, ball2, cert2).overlaps(gg1)


def test_psi1_order_preserving(ball2, cert2):
    xs = np.linspace(cert2.alpha_inv.hi, 1.0, 40)
    P = psi1(IntervalArray(xs, xs), ball2, cert2)
    assert np.all(P.hi[:-1] <= P.lo[1:])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_psi1_deriv_endpoints_bracket_interior(balls, certs, d):
    b, c = balls[d], certs[d]
    ai = c.alpha_inv
    left = psi1_deriv(Interval(ai.lo, ai.lo), b, c)
    right = psi1_deriv(Interval(1, 1), b, c)
    assert 0 < right.lo and left.hi < 1
    xs = np.linspace(ai.hi, 1.0, 52)[1:-1]
    mid = psi1_deriv(IntervalArray(xs, xs), b, c)
    assert np.all(mid.hi <= left.hi) and np.all(mid.lo >= right.lo)


def test_psi1_deriv_product_identity(ball2, cert2):
    k = cert2.constants()
    for x in (k.alpha_inv.lo, -0.1, 0.3, 1.0):
        X = Interval(x, x)
        lhs = psi1_deriv(X, ball2, cert2)
        rhs = psi0_deriv(k) / abs(ball2.eval_deriv(psi1(X, ball2, cert2)))
        assert lhs.overlaps(rhs)


# -- generations -------------------------------------------------------------------

def test_generation_one(gens2):
    g1 = gens2[1]
    n0, n1 = g1.node(0), g1.node(1)
    assert str(n0.sigma) == "0" and str(n1.sigma) == "1"
    assert n0.right_pt.hi < n1.left_pt.lo


def test_generation_two_unrolled(gens2, ball2, cert2):
    k = cert2.constants()
    n = gens2[2].node(SymbolSequence((0, 1)).index())
    inner = gens2[1].node(1)
    # Psi0 reverses order
    assert n.left_pt.overlaps(psi0(inner.right_pt, k))
    assert n.right_pt.overlaps(psi0(inner.left_pt, k))


def test_symbol_index_round_trip():
    for n in range(1, 7):
        for i in range(2**n):
            s = SymbolSequence.from_index(i, n)
            assert s.index() == i and len(s) == n


def test_child_inside_parent(gens2):
    for n in range(2, 7):
        child, parent = gens2[n], gens2[n - 1]
        # dropping the innermost symbol: index i -> i >> 1
        p = np.arange(len(child)) >> 1
        # sound test on enclosures: the true endpoints may sit anywhere inside them
        assert np.all(child.l_hi >= parent.l_lo[p])
        assert np.all(child.r_lo <= parent.r_hi[p])
        # and the overshoot is bounded by the enclosure widths
        assert np.all(child.l_lo >= parent.l_lo[p] - (parent.l_hi - parent.l_lo)[p]
                      - (child.l_hi - child.l_lo))


def test_nodes_inside_fundamental_interval(gens2, cert2):
    for g in gens2[1:]:
        assert np.all(g.l_hi >= cert2.alpha_inv.lo)
        assert np.all(g.r_lo <= 1.0)
        assert np.all(g.r_hi <= 1 + g.max_width)


def test_nodes_disjoint(gens2):
    for g in gens2[1:]:
        order = np.argsort(g.l_lo)
        assert np.all(g.l_lo[order][1:] >= g.r_hi[order][:-1] - 1e-10)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_endpoints_on_critical_orbit(balls, certs, d):
    b, c = balls[d], certs[d]
    gens = generations(b, c, 3)
    orbit = orbit_enclosures(b, 2**4 + 1).points
    for n, g in enumerate(gens[:4]):
        for node in g.nodes():
            for pt in (node.left_pt, node.right_pt):
                assert any(pt.overlaps(o) for o in orbit[1:2 ** (n + 1) + 1]), (n, pt)


def _scratch_derivs(sigma, ball, cert):
    """|Psi_sigma'| at both endpoints of I_sigma, recomputed symbol by symbol."""
    k = cert.constants()
    ends = [Interval(k.alpha_inv.lo, k.alpha_inv.hi), Interval(1, 1)]
    out = []
    for z in ends:
        x, der = z, Interval(1, 1)
        for a in reversed(sigma.bits):  # innermost first
            if a == 0:
                der = der * psi0_deriv(k)
                x = psi0(x, k)
            else:
                der = der * psi1_deriv(x, ball, cert)
                x = psi1(x, ball, cert)
        out.append((x, der))
    # orientation: an odd number of Psi0 factors swaps the ends
    if sigma.bits.count(0) % 2:
        out.reverse()
    return out


@pytest.mark.parametrize("d", [2, 3, 4])
def test_chain_rule_scratch(balls, certs, d):
    b, c = balls[d], certs[d]
    gens = generations(b, c, 4)
    for n in range(1, 5):
        for node in gens[n].nodes():
            (xl, dl), (xr, dr) = _scratch_derivs(node.sigma, b, c)
            assert node.left_pt.overlaps(xl) and node.right_pt.overlaps(xr)
            assert node.deriv_left.overlaps(dl) and node.deriv_right.overlaps(dr)
            assert abs(node.deriv_left.midpoint() / dl.midpoint() - 1) < 1e-7


def test_threads_and_chunks_do_not_change_results(ball2, cert2, monkeypatch):
    ref = generations(ball2, cert2, 8)[-1]
    monkeypatch.setattr(ifs, "CHUNK", 7)
    for threads in (1, 3):
        g = generations(ball2, cert2, 8, threads=threads)[-1]
        for f in ("l_lo", "l_hi", "r_lo", "r_hi", "dl_lo", "dl_hi", "dr_lo", "dr_hi"):
            assert np.array_equal(getattr(g, f), getattr(ref, f))


# -- contraction bounds --------------------------------------------------------------

def test_contraction_pure_psi0(gens2, cert2):
    cb = contraction_bounds(gens2[1].node(0))
    a = psi0_deriv(cert2.constants())
    assert cb.c_sigma.hi == pytest.approx(a.hi, rel=1e-15)
    assert cb.d_sigma.lo == pytest.approx(a.lo, rel=1e-15)


def test_contraction_psi1_max_at_left(gens2, ball2, cert2):
    node = gens2[1].node(1)
    cb = contraction_bounds(node)
    assert cb.c_sigma.hi == node.deriv_left.hi
    ai = cert2.alpha_inv
    xs = np.linspace(ai.hi, 1.0, 400)
    dense = psi1_deriv(IntervalArray(xs, xs), ball2, cert2)
    assert np.all(dense.hi <= cb.c_sigma.hi)
    assert np.all(dense.lo >= cb.d_sigma.lo)


def test_contraction_invariant_gen_1_to_3(gens2):
    for g in gens2[1:4]:
        for node in g.nodes():
            cb = contraction_bounds(node)
            assert 0 < cb.d_sigma.lo <= cb.c_sigma.hi < 1


def test_contraction_violation():
    one = Interval(1, 1)
    node = IFSNode(SymbolSequence((1,)), Interval(0.5, 0.5), one, Interval(0.5, 1.5), one)
    with pytest.raises(ContractionViolation):
        contraction_bounds(node)


# -- partition equations ----------------------------------------------------------------

def test_partition_halves():
    v = [Interval(0.5, 0.5)] * 2
    s = solve_partition(v, "upper")
    r = solve_partition(v, "lower")
    assert s >= 1 and abs(s - 1) <= 1e-9
    assert r <= 1 and abs(r - 1) <= 1e-9
    assert partition_sum(v, s, "upper") <= 1
    assert partition_sum(v, r, "lower") >= 1


def test_partition_middle_third():
    third = Interval(1, 1) / Interval(3, 3)
    exact = mpmath.log(2) / mpmath.log(3)
    s = solve_partition([third] * 2, "upper")
    r = solve_partition([third] * 2, "lower")
    assert r <= exact <= s
    assert abs(s - exact) <= 1e-9 and abs(r - exact) <= 1e-9


def test_partition_golden():
    v = [Interval(0.25, 0.25), Interval(0.5, 0.5)]
    exact = mpmath.log((1 + mpmath.sqrt(5)) / 2) / mpmath.log(2)
    # high-precision oracle for the closed form
    assert abs(mpmath.mpf(0.25) ** exact + mpmath.mpf(0.5) ** exact - 1) < mpmath.mpf(10) ** -30
    s = solve_partition(v, "upper")
    r = solve_partition(v, "lower")
    assert r <= exact <= s
    assert abs(s - exact) <= 1e-9 and abs(r - exact) <= 1e-9
    assert abs(float(exact) - 0.6942419) < 1e-7


def test_partition_many_values():
    rng = np.random.default_rng(1)
    v = rng.uniform(0.001, 0.02, 4096)
    s = solve_partition(v, "upper")
    r = solve_partition(v, "lower")
    assert r <= s and s - r < 1e-11
    with mpmath.workdps(30):
        total = mpmath.fsum(mpmath.mpf(x) ** mpmath.mpf(s) for x in v)
        assert total <= 1
        total = mpmath.fsum(mpmath.mpf(x) ** mpmath.mpf(r) for x in v)
        assert total >= 1


def test_partition_bad_input():
    with pytest.raises(NoRoot):
        solve_partition([1.5], "upper")
    with pytest.raises(NoRoot):
        solve_partition([], "lower")
    with pytest.raises(ValueError):
        solve_partition([0.5], "middle")


# -- driver ----------------------------------------------------------------------------

def test_dimension_d3_eight_generations(balls, certs):
    rows = dimension_run(3, 8, balls[3], certs[3])
    assert [r.generation for r in rows] == list(range(1, 9))
    for r in rows:
        assert r.r_n <= 0.606 <= r.s_n
        assert r.node_count == 2 ** r.generation


def test_dimension_width_abort_keeps_partial(ball2, cert2):
    with pytest.raises(WidthAbort) as info:
        dimension_run(2, 6, ball2, cert2, width_limit=2.5e-9)
    assert 1 <= len(info.value.partial) < 6


def test_dimension_refuses_foreign_certificate(balls, certs):
    with pytest.raises(CertificateError):
        dimension_run(2, 2, balls[2], certs[3])


def test_dimension_streaming_callback(ball2, cert2):
    seen = []
    rows = dimension_run(2, 4, ball2, cert2, on_generation=seen.append)
    assert seen == rows


def test_generations_must_be_positive(ball2, cert2):
    with pytest.raises(ValueError):
        dimension_run(2, 0, ball2, cert2)


def test_log2_over_log3_value():
    assert abs(math.log(2) / math.log(3) - 0.6309297536) < 1e-10
