from fractions import Fraction

import pytest
from hypothesis import given, settings

from superint.exactalg import RFunc, Ring
from superint.shiftops import (
    DiagonalForm,
    NotDiagonal,
    ShiftOp,
    anticommutator,
    commutator,
    compose,
    mul,
    product,
    reflect,
    symmetrizer3,
)

from strategies import RS, shiftops, small_polys

RA = Ring(("a",))
centers = small_polys(RA, max_deg=2, max_terms=3).map(lambda c: RS.rf(RS.coerce(c) / 2))

MANY = settings(max_examples=1000)
s, a = RS.vars("s", "a")


def op(d):
    return ShiftOp(RS, "s", {m: RS.rf(c) for m, c in d.items()})


def apply(A: ShiftOp, f):
    """Action on a function f(s): (A f)(s) = sum c_m(s) f(s + m)."""
    return lambda v: sum(c.evaluate({"s": v, "a": 3}) * f(v + m) for m, c in A.terms.items())


def test_compose_on_functions():
    A = op({1: s, -1: RS.const(2)})
    B = op({2: s * s})
    f = lambda v: Fraction(1, v * v + 7)
    AB = compose(A, B)
    for v in range(-3, 4):
        assert apply(AB, f)(v) == apply(A, apply(B, f))(v)


def test_mul_is_reverse_compose():
    A = op({1: s})
    B = op({0: s + 1})
    assert mul(A, B) == compose(B, A)


def test_basis_action_convention():
    # AB acts on a basis vector with B first, matching the matrix product M_A M_B
    X = op({1: RS.one()})
    D = op({0: s})
    assert mul(D, X) == op({1: s + 1})
    assert mul(X, D) == op({1: s})


def test_commutator_with_shift():
    X = op({1: RS.one()})
    D = op({0: s})
    assert commutator(D, X) == op({1: RS.one()})


def test_symmetrizer3_matches_definition():
    A, B, C = op({1: s}), op({0: s + a}), op({-1: a})
    expect = (mul(mul(A, B), C) + mul(mul(A, C), B) + mul(mul(B, A), C) + mul(mul(B, C), A)
              + mul(mul(C, A), B) + mul(mul(C, B), A))
    assert symmetrizer3(A, B, C) == expect
    assert anticommutator(A, B) == mul(A, B) + mul(B, A)


def test_zero_terms_dropped():
    A = op({1: s, 0: RS.zero()})
    assert A.shifts() == [1]
    assert (A - A).is_zero()


def test_json_roundtrip():
    A = op({1: s * s, -2: a + 1})
    assert ShiftOp.from_json(A.to_json(), "s") == A


def test_ring_mismatch_rejected():
    other = Ring(("s", "b"))
    with pytest.raises(ValueError):
        op({0: s}) + ShiftOp(other, "s", {0: other.rf(1)})


@MANY
@given(shiftops(), shiftops(), shiftops())
def test_associativity(A, B, C):
    assert mul(mul(A, B), C) == mul(A, mul(B, C))


@MANY
@given(shiftops(), shiftops(), shiftops())
def test_jacobi_identity(A, B, C):
    total = commutator(A, commutator(B, C)) + commutator(B, commutator(C, A)) + commutator(C, commutator(A, B))
    assert total.is_zero()


@MANY
@given(shiftops(), shiftops(), centers)
def test_reflection_is_automorphism(A, B, center):
    assert reflect(mul(A, B), center) == mul(reflect(A, center), reflect(B, center))
    assert reflect(reflect(A, center), center) == A


@settings(max_examples=300)
@given(shiftops(), shiftops(), shiftops())
def test_distributive(A, B, C):
    assert mul(A, B + C) == mul(A, B) + mul(A, C)
    assert product(A, B, C) == mul(mul(A, B), C)
