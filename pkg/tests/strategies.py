"""Shared hypothesis strategies."""

from fractions import Fraction

from hypothesis import strategies as st

from superint.exactalg import Ring, RFunc
from superint.shiftops import ShiftOp

R3 = Ring(("x", "y", "z"))
RS = Ring(("s", "a"))

big_int = st.integers(min_value=-(2 ** 256), max_value=2 ** 256)
small_int = st.integers(min_value=-9, max_value=9)


def fractions(nums=big_int):
    return st.builds(Fraction, nums, st.integers(min_value=1, max_value=2 ** 64))


def polys(ring=R3, max_deg=3, max_terms=5, coeffs=None):
    coeffs = coeffs if coeffs is not None else fractions()
    n = len(ring.symbols)
    exps = st.tuples(*[st.integers(0, max_deg)] * n)
    return st.dictionaries(exps, coeffs, max_size=max_terms).map(ring.from_terms)


def small_polys(ring=RS, max_deg=2, max_terms=3):
    return polys(ring, max_deg, max_terms, coeffs=small_int.map(Fraction))


def rfuncs(ring=RS):
    @st.composite
    def build(draw):
        num = draw(small_polys(ring))
        den = draw(small_polys(ring, max_deg=1, max_terms=2))
        if den.is_zero():
            den = ring.one()
        return RFunc(ring, num, den)

    return build()


def shiftops(ring=RS, index="s", max_terms=2):
    return st.dictionaries(st.integers(-2, 2), rfuncs(ring), min_size=1, max_size=max_terms).map(
        lambda d: ShiftOp(ring, index, d)
    )
