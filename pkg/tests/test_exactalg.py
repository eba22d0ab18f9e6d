import pickle
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from superint.exactalg import (
    MPoly,
    NotDivisible,
    NotEven,
    RFunc,
    Ring,
    even_part_in,
    exact_div,
    is_even_in,
    pochhammer,
    square_back,
)

from strategies import R3, RS, fractions, polys, rfuncs, small_polys

MANY = settings(max_examples=1000)


def to_sympy(p: MPoly):
    syms = sympy.symbols(p.ring.symbols)
    return sum(sympy.Rational(c.numerator, c.denominator) * sympy.prod(s ** e for s, e in zip(syms, ex))
               for ex, c in p.terms.items())


# -- examples ---------------------------------------------------------------


def test_pochhammer_examples():
    R = Ring(("alpha",))
    al = R.var("alpha")
    assert pochhammer(al, 0) == R.one()
    assert pochhammer(al, 3) == al ** 3 + 3 * al ** 2 + 2 * al
    assert pochhammer(-al, 2) == al ** 2 - al
    assert pochhammer(-al, 2) == pochhammer(al - 1, 2)


def test_pochhammer_rejects_negative_length():
    with pytest.raises(ValueError):
        pochhammer(Ring(("x",)).var("x"), -1)


def test_exact_div():
    R = Ring(("x",))
    x = R.var("x")
    assert exact_div(x ** 2 - 1, x - 1) == x + 1
    with pytest.raises(NotDivisible):
        exact_div(x ** 2 - 1, x + 2)
    with pytest.raises(ZeroDivisionError):
        exact_div(x, R.zero())


def test_even_part():
    R = Ring(("N", "a"))
    N, a = R.vars("N", "a")
    p = N ** 4 * a + 3 * N ** 2 - 1
    r = even_part_in(p, "N")
    assert r == N ** 2 * a + 3 * N - 1
    assert square_back(r, "N") == p
    with pytest.raises(NotEven):
        even_part_in(p + N, "N")


def test_rfunc_normalization_cancels_and_is_monic():
    x, y = R3.vars("x", "y")
    f = RFunc(R3, (x * x - y * y) * 6, (x - y) * -4)
    assert f.den.leading_coeff() == 1
    assert f == RFunc(R3, (x + y) * Fraction(-3, 2), R3.one())
    assert f.is_poly()


def test_zero_canonical():
    z = RFunc(R3, R3.zero(), R3.var("x"))
    assert z.is_zero() and z.den == R3.one()


def test_evaluate_and_shift():
    s, a = RS.vars("s", "a")
    f = RFunc(RS, s * s + a, s - a)
    assert f.evaluate({"s": 3, "a": 1}) == Fraction(10, 2)
    assert f.shift("s", 2) == RFunc(RS, (s + 2) ** 2 + a, s + 2 - a)
    assert f.reflect("s", RS.rf(a)) == RFunc(RS, (2 * a - s) ** 2 + a, a - s)


def test_text_roundtrip_example():
    p = R3.from_terms({(2, 0, 1): Fraction(3, 4), (0, 0, 0): Fraction(-1)})
    assert MPoly.from_text(p.to_text()) == p
    assert p.to_text().startswith("x,y,z|")


def test_pickle():
    f = RFunc(RS, RS.var("s") + 1, RS.var("a"))
    assert pickle.loads(pickle.dumps(f)) == f


# -- oracle: sympy ----------------------------------------------------------


@settings(max_examples=200)
@given(polys(max_deg=2, max_terms=4), polys(max_deg=2, max_terms=4))
def test_product_matches_sympy(p, q):
    assert sympy.expand(to_sympy(p * q) - to_sympy(p) * to_sympy(q)) == 0


@settings(max_examples=100)
@given(small_polys(R3), small_polys(R3))
def test_gcd_cancellation_matches_sympy(p, q):
    if q.is_zero():
        return
    f = RFunc(R3, p * (R3.var("x") + 2), q * (R3.var("x") + 2))
    assert sympy.simplify(to_sympy(f.num) / to_sympy(f.den) - to_sympy(p) / to_sympy(q)) == 0


# -- properties -------------------------------------------------------------


@MANY
@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p + q) + r == p + (q + r)
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert p - p == R3.zero()
    assert p * R3.one() == p


@MANY
@given(polys(), polys(max_deg=2, max_terms=3))
def test_exact_div_inverts_product(p, q):
    if q.is_zero():
        return
    assert exact_div(p * q, q) == p


@MANY
@given(rfuncs(), rfuncs())
def test_rfunc_field_ops(f, g):
    assert f + g == g + f
    assert (f + g) - g == f
    if not g.is_zero():
        assert (f * g) / g == f
    assert f.den.leading_coeff() == 1


@MANY
@given(rfuncs())
def test_normalize_idempotent(f):
    again = RFunc(RS, f.num, f.den)
    assert again == f
    assert again.num == f.num and again.den == f.den
    assert hash(again) == hash(f)


@MANY
@given(rfuncs(), st.integers(-3, 3), st.integers(-3, 3))
def test_shift_composes(f, m, n):
    assert f.shift("s", m).shift("s", n) == f.shift("s", m + n)


@MANY
@given(small_polys(Ring(("x",))), st.integers(0, 5), st.integers(0, 5))
def test_pochhammer_identities(base, m, n):
    assert pochhammer(base, m + n) == pochhammer(base, m) * pochhammer(base + m, n)
    assert pochhammer(-base, n) == pochhammer(base - n + 1, n) * (-1) ** n
    if not base.is_const():
        assert pochhammer(base, n).degree("x") == n * base.degree("x")


@MANY
@given(polys())
def test_even_part_roundtrip(p):
    sq = square_back(p, "y")
    assert is_even_in(sq, "y")
    assert even_part_in(sq, "y") == p


@MANY
@given(polys())
def test_text_roundtrip(p):
    assert MPoly.from_text(p.to_text()) == p


@MANY
@given(rfuncs())
def test_rfunc_text_roundtrip(f):
    assert RFunc.from_text(f.to_text()) == f


@settings(max_examples=300)
@given(rfuncs(), fractions(st.integers(-50, 50)), fractions(st.integers(-50, 50)))
def test_evaluate_is_homomorphism(f, sv, av):
    vals = {"s": sv, "a": av}
    if f.den.evaluate(vals) == 0:
        return
    g = f * f + f
    assert g.evaluate(vals) == f.evaluate(vals) ** 2 + f.evaluate(vals)
