"""Exact coefficient arithmetic.

Rationals are :class:`fractions.Fraction`.  Multivariate polynomials and
rational functions wrap FLINT ``fmpq_mpoly`` values (via python-flint), ordered
graded-lexicographically in a fixed symbol order.  Rational functions are kept
in lowest terms with a monic denominator, so two equal values always have equal
(num, den) pairs and equality is a plain comparison.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Sequence, Tuple, Union

import flint

Rat = Fraction
Exponent = Tuple[int, ...]


class NotDivisible(ArithmeticError):
    """Raised when an exact polynomial division leaves a remainder."""


class NotEven(ValueError):
    """Raised when a polynomial is not invariant under symbol -> -symbol."""


class NotPolynomial(ValueError):
    """Raised when a rational function has a nonconstant denominator."""


def rat(x) -> Fraction:
    """Coerce int, str, Fraction, fmpq or gmpy2.mpq to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    num = getattr(x, "numerator", None)
    den = getattr(x, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    raise TypeError(f"cannot convert {x!r} to Rat")


def _foreign(x) -> bool:
    """True for operands the scalar types should hand back to the other side."""
    return not isinstance(x, (RFunc, MPoly, int, Fraction)) and not hasattr(x, "denominator")


def _to_qq(x) -> flint.fmpq:
    x = rat(x)
    return flint.fmpq(x.numerator, x.denominator)


def _key(p) -> tuple:
    return tuple(sorted((e, (int(c.p), int(c.q))) for e, c in p.to_dict().items()))


class Ring:
    """Symbol context shared by all values exchanged within one computation."""

    __slots__ = ("symbols", "_C", "_gens", "_zero", "_one")

    _cache: Dict[Tuple[str, ...], "Ring"] = {}

    def __new__(cls, symbols: Sequence[str]):
        key = tuple(symbols)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        if len(set(key)) != len(key):
            raise ValueError(f"repeated symbol in {key}")
        if not key:
            raise ValueError("a ring needs at least one symbol")
        obj = super().__new__(cls)
        obj.symbols = key
        obj._C = flint.fmpq_mpoly_ctx.get(key, "deglex")
        obj._gens = obj._C.gens()
        obj._zero = obj._C.from_dict({})
        obj._one = obj._C.constant(1)
        cls._cache[key] = obj
        return obj

    def __repr__(self):
        return f"Ring({','.join(self.symbols)})"

    def __reduce__(self):
        return (Ring, (self.symbols,))

    def index(self, name: str) -> int:
        return self.symbols.index(name)

    def var(self, name: str) -> "MPoly":
        return MPoly(self, self._gens[self.index(name)])

    def vars(self, *names: str):
        return tuple(self.var(n) for n in names)

    def _const(self, c):
        return self._C.constant(_to_qq(c))

    def const(self, c) -> "MPoly":
        return MPoly(self, self._const(c))

    def zero(self) -> "MPoly":
        return MPoly(self, self._zero)

    def one(self) -> "MPoly":
        return MPoly(self, self._one)

    def from_terms(self, terms: Mapping[Exponent, object]) -> "MPoly":
        d = {}
        n = len(self.symbols)
        for e, c in terms.items():
            e = tuple(int(v) for v in e)
            if len(e) != n or any(v < 0 for v in e):
                raise ValueError(f"exponent {e} is not valid for {self}")
            c = rat(c)
            if c:
                d[e] = _to_qq(c)
        return MPoly(self, self._C.from_dict(d))

    def _convert(self, p, src: "Ring"):
        """Move a raw polynomial from ``src`` into this ring, matching symbols by name."""
        where = []
        for name in src.symbols:
            where.append(self.symbols.index(name) if name in self.symbols else None)
        n = len(self.symbols)
        out = {}
        for e, c in p.to_dict().items():
            new = [0] * n
            for k, j in zip(e, where):
                if k:
                    if j is None:
                        raise ValueError(f"cannot drop symbols of {src} that occur when moving to {self}")
                    new[j] = k
            out[tuple(new)] = c
        return self._C.from_dict(out)

    def coerce(self, x) -> "MPoly":
        if isinstance(x, MPoly):
            if x.ring is self:
                return x
            return MPoly(self, self._convert(x._p, x.ring))
        return self.const(x)

    def rf(self, x) -> "RFunc":
        if isinstance(x, RFunc):
            if x.ring is self:
                return x
            return RFunc(self, self._convert(x._n, x.ring), self._convert(x._d, x.ring), normalized=True)
        return RFunc.from_poly(self.coerce(x))


# ---------------------------------------------------------------------------
# text format:  "s,u,a|2,0,1:3/4;0,0,0:-1"   (zero polynomial: "s,u,a|0")


def _exp_text(e: Exponent) -> str:
    return ",".join(str(v) for v in e)


def _coef_text(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator)


class MPoly:
    """Polynomial over Q in the symbols of its :class:`Ring`."""

    __slots__ = ("ring", "_p")

    def __init__(self, ring: Ring, p):
        self.ring = ring
        self._p = p

    # -- structure --------------------------------------------------------
    @property
    def symbols(self) -> Tuple[str, ...]:
        return self.ring.symbols

    @property
    def terms(self) -> Dict[Exponent, Fraction]:
        return {e: rat(c) for e, c in self._p.terms()}

    def sorted_terms(self):
        """Terms in descending grlex order."""
        return [(e, rat(c)) for e, c in self._p.terms()]

    def is_zero(self) -> bool:
        return self._p.is_zero()

    def is_const(self) -> bool:
        return self._p.is_constant()

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant")
        return rat(self._p.leading_coefficient()) if not self._p.is_zero() else Fraction(0)

    def degree(self, name: str) -> int:
        if self._p.is_zero():
            return -1
        return int(self._p.degrees()[self.ring.index(name)])

    def total_degree(self) -> int:
        return max((sum(e) for e in self._p.monoms()), default=-1)

    def leading_coeff(self) -> Fraction:
        return rat(self._p.leading_coefficient())

    # -- arithmetic -------------------------------------------------------
    def _lift(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            if other.ring is not self.ring:
                raise ValueError(f"symbol mismatch: {self.ring} vs {other.ring}")
            return other
        return self.ring.const(other)

    def __add__(self, other):
        if isinstance(other, RFunc):
            return RFunc.from_poly(self) + other
        if _foreign(other):
            return NotImplemented
        return MPoly(self.ring, self._p + self._lift(other)._p)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RFunc):
            return RFunc.from_poly(self) - other
        if _foreign(other):
            return NotImplemented
        return MPoly(self.ring, self._p - self._lift(other)._p)

    def __rsub__(self, other):
        return MPoly(self.ring, self._lift(other)._p - self._p)

    def __mul__(self, other):
        if isinstance(other, RFunc):
            return RFunc.from_poly(self) * other
        if _foreign(other):
            return NotImplemented
        return MPoly(self.ring, self._p * self._lift(other)._p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RFunc.from_poly(self) / other

    def __neg__(self):
        return MPoly(self.ring, -self._p)

    def __pow__(self, n: int):
        if n < 0:
            return RFunc.from_poly(self) ** n
        return MPoly(self.ring, self._p ** n)

    def __eq__(self, other):
        if isinstance(other, MPoly):
            return self.ring is other.ring and self._p == other._p
        if isinstance(other, RFunc):
            return other == self
        if isinstance(other, (int, Fraction)):
            return self.is_const() and self.const_value() == other
        return NotImplemented

    def __hash__(self):
        return hash((self.ring.symbols, _key(self._p)))

    def __bool__(self):
        return not self._p.is_zero()

    def __repr__(self):
        return f"MPoly({self})"

    def __str__(self):
        return _show(self._p)

    def __reduce__(self):
        return (MPoly.from_text, (self.to_text(),))

    # -- substitution -----------------------------------------------------
    def shift(self, name: str, m) -> "MPoly":
        """Taylor shift: symbol -> symbol + m (m rational or MPoly)."""
        if (not isinstance(m, MPoly) and m == 0) or self._p.is_zero():
            return self
        idx = self.ring.index(name)
        gens = list(self.ring._gens)
        gens[idx] = gens[idx] + self._lift(m)._p
        return MPoly(self.ring, self._p.compose(*gens))

    def subs(self, mapping: Mapping[str, object]) -> "MPoly":
        """Substitute polynomials (or constants) for symbols, simultaneously."""
        if not mapping:
            return self
        gens = list(self.ring._gens)
        for k, v in mapping.items():
            gens[self.ring.index(k)] = self._lift(v)._p
        return MPoly(self.ring, self._p.compose(*gens))

    def evaluate(self, values: Mapping[str, object]) -> Fraction:
        """Value at a point; symbols that do not occur may be left out."""
        if self._p.is_zero():
            return Fraction(0)
        vals = []
        degs = self._p.degrees()
        for name, d in zip(self.ring.symbols, degs):
            if name in values:
                vals.append(_to_qq(values[name]))
            elif d == 0:
                vals.append(flint.fmpq(0))
            else:
                raise KeyError(f"no value for symbol {name}")
        return rat(self._p(*vals))

    def partial_eval(self, values: Mapping[str, object]) -> "MPoly":
        return self.subs({k: rat(v) for k, v in values.items()})

    def reflect(self, name: str, center) -> "MPoly":
        """symbol -> 2*center - symbol."""
        c = self._lift(center) if not isinstance(center, RFunc) else center.as_poly()
        x = self.ring.var(name)
        return self.subs({name: c * 2 - x})

    def to_ring(self, ring: Ring) -> "MPoly":
        return ring.coerce(self)

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        head = ",".join(self.ring.symbols) + "|"
        if self._p.is_zero():
            return head + "0"
        return head + ";".join(f"{_exp_text(e)}:{_coef_text(c)}" for e, c in self.sorted_terms())

    @staticmethod
    def from_text(text: str) -> "MPoly":
        head, _, body = text.partition("|")
        ring = Ring(tuple(head.split(",")) if head else ())
        if body == "0":
            return ring.zero()
        terms = {}
        for chunk in body.split(";"):
            e, _, c = chunk.partition(":")
            exps = tuple(int(v) for v in e.split(",")) if e else ()
            terms[exps] = Fraction(c)
        return ring.from_terms(terms)


def _show(p) -> str:
    return str(p).replace("^", "**")


class RFunc:
    """num/den in lowest terms; den monic under grlex (so its leading coefficient is 1)."""

    __slots__ = ("ring", "_n", "_d")

    def __init__(self, ring: Ring, num, den=None, *, normalized: bool = False):
        self.ring = ring
        if den is None:
            den = ring._one
        if isinstance(num, MPoly):
            num = ring.coerce(num)._p
        if isinstance(den, MPoly):
            den = ring.coerce(den)._p
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if not normalized:
            num, den = _normalize(ring, num, den)
        self._n = num
        self._d = den

    @staticmethod
    def from_poly(p: MPoly) -> "RFunc":
        return RFunc(p.ring, p._p, p.ring._one, normalized=True)

    @property
    def num(self) -> MPoly:
        return MPoly(self.ring, self._n)

    @property
    def den(self) -> MPoly:
        return MPoly(self.ring, self._d)

    def is_zero(self) -> bool:
        return self._n.is_zero()

    def is_poly(self) -> bool:
        return self._d.is_constant()

    def as_poly(self) -> MPoly:
        if not self._d.is_constant():
            raise NotPolynomial(f"denominator {_show(self._d)} is not constant")
        return MPoly(self.ring, self._n)

    # -- arithmetic -------------------------------------------------------
    def _lift(self, other) -> "RFunc":
        if isinstance(other, RFunc):
            if other.ring is not self.ring:
                raise ValueError(f"symbol mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, MPoly):
            if other.ring is not self.ring:
                raise ValueError(f"symbol mismatch: {self.ring} vs {other.ring}")
            return RFunc.from_poly(other)
        return RFunc(self.ring, self.ring._const(other), normalized=True)

    def __add__(self, other):
        if _foreign(other):
            return NotImplemented
        o = self._lift(other)
        n1, d1, n2, d2 = self._n, self._d, o._n, o._d
        if n1.is_zero():
            return o
        if n2.is_zero():
            return self
        c1, c2 = d1.is_constant(), d2.is_constant()
        # monic constant denominators are exactly 1
        if c1 and c2:
            return RFunc(self.ring, n1 + n2, d1, normalized=True)
        if c2:
            return RFunc(self.ring, n1 + n2 * d1, d1, normalized=True)
        if c1:
            return RFunc(self.ring, n1 * d2 + n2, d2, normalized=True)
        if d1 == d2:
            return RFunc(self.ring, n1 + n2, d1)
        g = d1.gcd(d2)
        if g.is_constant():
            # coprime denominators: the sum is already in lowest terms
            return RFunc(self.ring, n1 * d2 + n2 * d1, d1 * d2, normalized=True)
        a = _exquo(d1, g)
        b = _exquo(d2, g)
        num = n1 * b + n2 * a
        # any common factor of num and a*b*g divides g
        h = num.gcd(g)
        if not h.is_constant():
            num = _exquo(num, h)
            g = _exquo(g, h)
        return RFunc(self.ring, num, a * b * g, normalized=True)

    __radd__ = __add__

    def __neg__(self):
        return RFunc(self.ring, -self._n, self._d, normalized=True)

    def __sub__(self, other):
        if _foreign(other):
            return NotImplemented
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if _foreign(other):
            return NotImplemented
        o = self._lift(other)
        n1, d1, n2, d2 = self._n, self._d, o._n, o._d
        if n1.is_zero() or n2.is_zero():
            return RFunc(self.ring, self.ring._zero, normalized=True)
        c1, c2 = d1.is_constant(), d2.is_constant()
        if c1 and c2:
            return RFunc(self.ring, n1 * n2, d1, normalized=True)
        # Henrici: cancel cross gcds only
        if not c2 and not n1.is_constant():
            n1, d2 = _gcd_cancel(n1, d2)
        if not c1 and not n2.is_constant():
            n2, d1 = _gcd_cancel(n2, d1)
        return RFunc(self.ring, n1 * n2, d1 * d2, normalized=True)

    __rmul__ = __mul__

    def inverse(self) -> "RFunc":
        if self._n.is_zero():
            raise ZeroDivisionError("inverse of zero")
        num, den = _monic(self._d, self._n)
        return RFunc(self.ring, num, den, normalized=True)

    def __truediv__(self, other):
        if _foreign(other):
            return NotImplemented
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other):
        return self._lift(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        return RFunc(self.ring, self._n ** n, self._d ** n, normalized=True)

    def __eq__(self, other):
        if isinstance(other, (RFunc, MPoly, int, Fraction)):
            try:
                o = self._lift(other)
            except ValueError:
                return False
            return self._n == o._n and self._d == o._d
        return NotImplemented

    def __hash__(self):
        return hash((self.ring.symbols, _key(self._n), _key(self._d)))

    def __bool__(self):
        return not self._n.is_zero()

    def __repr__(self):
        return f"RFunc({_show(self._n)} / {_show(self._d)})"

    def __str__(self):
        if self._d.is_constant():
            return _show(self._n)
        return f"({_show(self._n)})/({_show(self._d)})"

    def __reduce__(self):
        return (RFunc.from_text, (self.to_text(),))

    # -- substitution -----------------------------------------------------
    def shift(self, name: str, m) -> "RFunc":
        if m == 0:
            return self
        idx = self.ring.index(name)
        gens = list(self.ring._gens)
        gens[idx] = gens[idx] + _to_qq(m)
        n = self._n.compose(*gens)
        # a shift is an automorphism that keeps lowest terms and leading monomials
        d = self._d if self._d.is_constant() else self._d.compose(*gens)
        return RFunc(self.ring, n, d, normalized=True)

    def subs(self, mapping: Mapping[str, object]) -> "RFunc":
        """Simultaneous substitution of rational functions for symbols."""
        repl = {}
        for k, v in mapping.items():
            repl[self.ring.index(k)] = self._lift(v)
        if all(r.is_poly() for r in repl.values()):
            gens = list(self.ring._gens)
            for i, r in repl.items():
                gens[i] = r._n
            n = self._n.compose(*gens)
            d = self._d if self._d.is_constant() else self._d.compose(*gens)
            return RFunc(self.ring, n, d)
        return _subs_poly(self.ring, self._n, repl) / _subs_poly(self.ring, self._d, repl)

    def evaluate(self, values: Mapping[str, object]) -> Fraction:
        d = self.den.evaluate(values)
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at this point")
        return self.num.evaluate(values) / d

    def partial_eval(self, values: Mapping[str, object]) -> "RFunc":
        return self.subs({k: rat(v) for k, v in values.items()})

    def reflect(self, name: str, center: "RFunc") -> "RFunc":
        x = RFunc.from_poly(self.ring.var(name))
        return self.subs({name: self._lift(center) * 2 - x})

    def to_ring(self, ring: Ring) -> "RFunc":
        return ring.rf(self)

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        return f"{self.num.to_text()}//{self.den.to_text()}"

    @staticmethod
    def from_text(text: str) -> "RFunc":
        a, sep, b = text.partition("//")
        num = MPoly.from_text(a)
        den = MPoly.from_text(b) if sep else num.ring.one()
        return RFunc(num.ring, num._p, den._p)


def _exquo(a, b):
    q, r = divmod(a, b)
    if not r.is_zero():
        raise NotDivisible("internal: expected exact division")
    return q


def _gcd_cancel(num, den):
    g = num.gcd(den)
    if not g.is_constant():
        num = _exquo(num, g)
        den = _exquo(den, g)
    return num, den


def _monic(num, den):
    lc = den.leading_coefficient()
    if lc != 1:
        num = num / lc
        den = den / lc
    return num, den


def _normalize(ring: Ring, num, den):
    if num.is_zero():
        return num, ring._one
    if den.is_constant():
        return num / den.leading_coefficient(), ring._one
    num, den = _gcd_cancel(num, den)
    return _monic(num, den)


def _subs_poly(ring: Ring, p, repl: Dict[int, RFunc]) -> RFunc:
    if not repl:
        return RFunc(ring, p, normalized=True)
    idxs = sorted(repl)
    powers: Dict[Tuple[int, int], RFunc] = {}

    def pw(i, k):
        key = (i, k)
        if key not in powers:
            powers[key] = repl[i] ** k
        return powers[key]

    # group by the substituted exponents so each distinct product is formed once
    groups: Dict[Tuple[int, ...], dict] = {}
    for e, c in p.terms():
        key = tuple(e[i] for i in idxs)
        rest = list(e)
        for i in idxs:
            rest[i] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    acc = RFunc(ring, ring._zero, normalized=True)
    for key, terms in groups.items():
        t = RFunc(ring, ring._C.from_dict(terms), normalized=True)
        for i, k in zip(idxs, key):
            if k:
                t = t * pw(i, k)
        acc = acc + t
    return acc


# ---------------------------------------------------------------------------
# operations


def pochhammer(base, length: int):
    """Rising factorial base(base+1)...(base+length-1); works for MPoly or RFunc."""
    if length < 0:
        raise ValueError("length must be nonnegative")
    if isinstance(base, MPoly):
        out = base.ring.one()
    elif isinstance(base, RFunc):
        out = RFunc.from_poly(base.ring.one())
    else:
        out = Fraction(1)
        base = rat(base)
    for j in range(length):
        out = out * (base + j)
    return out


def exact_div(a: MPoly, b: MPoly) -> MPoly:
    """Return q with a = q*b, or raise NotDivisible."""
    if b.ring is not a.ring:
        raise ValueError("symbol mismatch")
    if b.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    q, r = divmod(a._p, b._p)
    if not r.is_zero():
        raise NotDivisible(f"{a} is not divisible by {b}")
    return MPoly(a.ring, q)


def is_even_in(p: MPoly, name: str) -> bool:
    i = p.ring.index(name)
    return all(e[i] % 2 == 0 for e in p._p.monoms())


def even_part_in(p: MPoly, name: str) -> MPoly:
    """Return r with r(x^2) = p(x), where x is the named symbol.

    The result lives in the same ring; its ``name`` slot now stands for x^2.
    """
    i = p.ring.index(name)
    out = {}
    for e, c in p._p.terms():
        if e[i] % 2:
            raise NotEven(f"{p} has odd powers of {name}")
        out[e[:i] + (e[i] // 2,) + e[i + 1:]] = c
    return MPoly(p.ring, p.ring._C.from_dict(out))


def square_back(r: MPoly, name: str) -> MPoly:
    """Inverse of even_part_in: replace the named slot's exponent k by 2k."""
    i = r.ring.index(name)
    out = {e[:i] + (2 * e[i],) + e[i + 1:]: c for e, c in r._p.terms()}
    return MPoly(r.ring, r.ring._C.from_dict(out))


def as_rfunc(ring: Ring, x) -> RFunc:
    return ring.rf(x)


def linear_combination(items: Iterable[Tuple[object, RFunc]], ring: Ring) -> RFunc:
    acc = RFunc(ring, ring._zero, normalized=True)
    for c, v in items:
        acc = acc + v * c
    return acc


Number = Union[int, Fraction]
