"""Difference operators in one index symbol.

A :class:`ShiftOp` is a finite sum of terms ``c_m(s) T^m``.  Read as a function
model, ``(A f)(s) = sum_m c_m(s) f(s+m)``; that is what :func:`compose` implements.

The models built in :mod:`superint.systems` store *basis actions*:
``A Psi_s = sum_m c_m(s) Psi_{s+m}``.  On basis actions the operator product
``A B`` (apply ``B`` first) is ``compose(B, A)``, so :func:`mul` and the bracket
helpers built on it use that order.  The two readings are anti-isomorphic; every
structure relation is checked with :func:`mul`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional

from .exactalg import (
    MPoly,
    NotEven,
    NotPolynomial,
    RFunc,
    Ring,
    even_part_in,
    rat,
)


class NotDiagonal(ValueError):
    """Raised when an operator expected to be diagonal has a nonzero shift term."""


class ShiftOp:
    __slots__ = ("ring", "index", "terms")

    def __init__(self, ring: Ring, index: str, terms: Mapping[int, object] = None):
        self.ring = ring
        self.index = index
        if index not in ring.symbols:
            raise ValueError(f"index symbol {index} not in {ring}")
        clean: Dict[int, RFunc] = {}
        for m, c in (terms or {}).items():
            c = ring.rf(c) if not isinstance(c, RFunc) else c
            if c.ring is not ring:
                raise ValueError(f"symbol mismatch: {c.ring} vs {ring}")
            if not c.is_zero():
                clean[int(m)] = c
        self.terms = clean

    # -- constructors -----------------------------------------------------
    @classmethod
    def diag(cls, ring: Ring, index: str, c) -> "ShiftOp":
        return cls(ring, index, {0: c})

    @classmethod
    def single(cls, ring: Ring, index: str, m: int, c) -> "ShiftOp":
        return cls(ring, index, {m: c})

    @classmethod
    def identity(cls, ring: Ring, index: str) -> "ShiftOp":
        return cls(ring, index, {0: 1})

    @classmethod
    def zero(cls, ring: Ring, index: str) -> "ShiftOp":
        return cls(ring, index, {})

    def like(self, terms) -> "ShiftOp":
        return ShiftOp(self.ring, self.index, terms)

    # -- queries ----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def shifts(self) -> List[int]:
        return sorted(self.terms)

    def coeff(self, m: int) -> RFunc:
        c = self.terms.get(m)
        return c if c is not None else self.ring.rf(0)

    def _check(self, other: "ShiftOp"):
        if not isinstance(other, ShiftOp):
            raise TypeError(f"expected ShiftOp, got {type(other).__name__}")
        if other.ring is not self.ring or other.index != self.index:
            raise ValueError(
                f"symbol mismatch: {self.ring}/{self.index} vs {other.ring}/{other.index}"
            )

    # -- linear structure -------------------------------------------------
    def __add__(self, other: "ShiftOp") -> "ShiftOp":
        self._check(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return self.like(out)

    def __sub__(self, other: "ShiftOp") -> "ShiftOp":
        return self + (-other)

    def __neg__(self) -> "ShiftOp":
        return self.like({m: -c for m, c in self.terms.items()})

    def scale(self, k) -> "ShiftOp":
        """Left multiplication by a constant (anything free of the index symbol)."""
        k = self.ring.rf(k) if not isinstance(k, RFunc) else k
        return self.like({m: c * k for m, c in self.terms.items()})

    def __rmul__(self, k) -> "ShiftOp":
        return self.scale(k)

    def __mul__(self, other):
        if isinstance(other, ShiftOp):
            return mul(self, other)
        return self.scale(other)

    def __matmul__(self, other: "ShiftOp") -> "ShiftOp":
        return mul(self, other)

    def __eq__(self, other):
        if not isinstance(other, ShiftOp):
            return NotImplemented
        return (
            self.ring is other.ring
            and self.index == other.index
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.ring.symbols, self.index, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        inner = ", ".join(f"{m}: {c}" for m, c in sorted(self.terms.items()))
        return f"ShiftOp[{self.index}]{{{inner}}}"

    # -- other ------------------------------------------------------------
    def map_coeffs(self, f) -> "ShiftOp":
        return self.like({m: f(c) for m, c in self.terms.items()})

    def partial_eval(self, values: Mapping[str, object]) -> "ShiftOp":
        return self.map_coeffs(lambda c: c.partial_eval(values))

    def to_json(self) -> list:
        return [
            {"shift": m, "coefficient": self.terms[m].to_text()} for m in sorted(self.terms)
        ]

    @staticmethod
    def from_json(data: list, index: str) -> "ShiftOp":
        terms = {int(t["shift"]): RFunc.from_text(t["coefficient"]) for t in data}
        if not terms:
            raise ValueError("empty operator carries no symbol set; build with ShiftOp.zero")
        ring = next(iter(terms.values())).ring
        return ShiftOp(ring, index, terms)


def _shifted(c: RFunc, index: str, m: int, cache: Dict) -> RFunc:
    key = (id(c), m)
    hit = cache.get(key)
    if hit is None:
        hit = c.shift(index, m)
        cache[key] = (hit, c)  # keep c alive so id() stays unique
        return hit
    return hit[0]


def compose(A: ShiftOp, B: ShiftOp) -> ShiftOp:
    """Function-model composition (A o B) f = A(B f).

    Term (m1, c1) times (m2, c2) gives shift m1+m2 with coefficient c1(s) c2(s+m1).
    """
    A._check(B)
    cache: Dict = {}
    out: Dict[int, RFunc] = {}
    for m1, c1 in A.terms.items():
        for m2, c2 in B.terms.items():
            t = c1 * _shifted(c2, A.index, m1, cache)
            m = m1 + m2
            out[m] = out[m] + t if m in out else t
    return A.like(out)


def mul(A: ShiftOp, B: ShiftOp) -> ShiftOp:
    """Operator product AB on basis actions (B acts first)."""
    return compose(B, A)


def product(*ops: ShiftOp) -> ShiftOp:
    out = ops[0]
    for op in ops[1:]:
        out = mul(out, op)
    return out


def commutator(A: ShiftOp, B: ShiftOp) -> ShiftOp:
    return mul(A, B) - mul(B, A)


def anticommutator(A: ShiftOp, B: ShiftOp) -> ShiftOp:
    return mul(A, B) + mul(B, A)


def symmetrizer3(A: ShiftOp, B: ShiftOp, C: ShiftOp) -> ShiftOp:
    """Sum of the six orderings of ABC."""
    pairs: Dict = {}

    def pair(x, y):
        key = (id(x), id(y))
        if key not in pairs:
            pairs[key] = mul(x, y)
        return pairs[key]

    total: Optional[ShiftOp] = None
    for x, y, z in itertools.permutations((A, B, C)):
        t = mul(pair(x, y), z)
        total = t if total is None else total + t
    return total


def reflect(A: ShiftOp, center) -> ShiftOp:
    """Substitute s -> 2*center - s in every coefficient and negate every shift."""
    c = A.ring.rf(center)
    return A.like({-m: coef.reflect(A.index, c) for m, coef in A.terms.items()})


def linear(ops: Iterable, ring: Ring, index: str) -> ShiftOp:
    """Sum of coef*op over (coef, op) pairs."""
    total = ShiftOp.zero(ring, index)
    for k, op in ops:
        total = total + op.scale(k)
    return total


# ---------------------------------------------------------------------------
# diagonal rewriting


@dataclass(frozen=True)
class DiagonalForm:
    """A polynomial in the energy symbol, the separation symbol and parameters."""

    poly: MPoly
    energy: str
    separation: str

    def to_text(self) -> str:
        return self.poly.to_text()

    def __str__(self):
        return str(self.poly)


def to_diagonal(A: ShiftOp, model) -> DiagonalForm:
    """Rewrite a diagonal, reflection-even, polynomial operator in (H, L, params).

    ``model`` must provide: ``diag_coefficient_to_form(c: MPoly) -> MPoly``.  The
    three hypotheses are checked here and reported with distinct errors.
    """
    if A.is_zero():
        return DiagonalForm(model.diag_ring.zero(), model.energy_symbol, model.separation_symbol)
    if any(m != 0 for m in A.terms):
        raise NotDiagonal(f"operator has shifts {[m for m in A.shifts() if m]}")
    c = A.terms[0]
    if not c.is_poly():
        raise NotPolynomial(f"diagonal coefficient has denominator {c.den}")
    return DiagonalForm(
        model.diag_coefficient_to_form(c.as_poly()),
        model.energy_symbol,
        model.separation_symbol,
    )


__all__ = [
    "ShiftOp",
    "DiagonalForm",
    "NotDiagonal",
    "NotEven",
    "NotPolynomial",
    "compose",
    "mul",
    "product",
    "commutator",
    "anticommutator",
    "symmetrizer3",
    "reflect",
    "linear",
    "to_diagonal",
    "even_part_in",
    "rat",
    "Fraction",
]
