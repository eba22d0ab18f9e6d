"""Catalog of the five system families and their one-variable models.

Each model is built for fixed coprime (p, q).  Ladder coefficients are obtained
by running the separated-function factor recurrences step by step (each step
updates the separated indices and contributes a multiplier) and are then
compared against the closed-form actions.  Coefficients are basis actions:
``raise Psi_i = c_+(i) Psi_{i+step}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exactalg import (
    MPoly,
    NotEven,
    NotPolynomial,
    RFunc,
    Ring,
    even_part_in,
    exact_div,
    is_even_in,
    pochhammer,
)
from .shiftops import ShiftOp, mul, reflect


class ConstructionMismatch(RuntimeError):
    """Composed factor recurrences disagree with a closed-form ladder action."""


class UnsupportedSystem(ValueError):
    pass


SYSTEM_IDS = ("sphere", "complex_euclidean", "caged", "ttw", "kepler")

_ALIASES = {
    "sphere": "sphere",
    "s2": "sphere",
    "complex_euclidean": "complex_euclidean",
    "complexeuclidean": "complex_euclidean",
    "ce": "complex_euclidean",
    "caged": "caged",
    "cagedoscillator": "caged",
    "caged_oscillator": "caged",
    "ttw": "ttw",
    "kepler": "kepler",
    "keplerdeformed": "kepler",
    "kepler_deformed": "kepler",
}


def canonical_id(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in _ALIASES:
        raise UnsupportedSystem(f"unknown system {name!r}; expected one of {', '.join(SYSTEM_IDS)}")
    return _ALIASES[key]


# ---------------------------------------------------------------------------
# model record


@dataclass
class SystemModel:
    id: str
    p: int
    q: int
    ring: Ring
    index: str
    params: Tuple[str, ...]
    center: Optional[RFunc]
    # separation eigenvalue: "square" -> sep_scale * (index - center)^2 ; "affine" -> sep_slope*index + sep_offset
    separation_symbol: str
    sep_kind: str
    sep_scale: Optional[RFunc] = None
    sep_slope: Optional[RFunc] = None
    sep_offset: Optional[RFunc] = None
    # energy: auxiliary symbol tied to the energy symbol
    energy_symbol: str = "E"
    energy_aux: str = ""
    energy_kind: str = "affine"  # affine: aux = e_slope*E + e_offset ; square: (aux-e_center)^2 = e_slope*E + e_offset
    e_slope: Optional[RFunc] = None
    e_offset: Optional[RFunc] = None
    e_center: Optional[RFunc] = None
    # extra square rules applied after rewriting: symbol^2 -> factor * target
    square_rules: Tuple[Tuple[str, str, Fraction], ...] = ()
    step: int = 1
    ext_ring: Ring = None
    diag_ring: Ring = None
    notes: List[str] = field(default_factory=list)

    @property
    def k(self) -> Fraction:
        return Fraction(self.p, self.q)

    # -- helpers ----------------------------------------------------------
    def var(self, name: str) -> RFunc:
        return self.ring.rf(self.ring.var(name))

    def rf(self, x) -> RFunc:
        return self.ring.rf(x)

    def diag(self, c) -> ShiftOp:
        return ShiftOp.diag(self.ring, self.index, c)

    def single(self, m: int, c) -> ShiftOp:
        return ShiftOp.single(self.ring, self.index, m, c)

    def identity(self) -> ShiftOp:
        return ShiftOp.identity(self.ring, self.index)

    def centered(self) -> RFunc:
        """Index minus reflection center (N+1/2, s, Omega)."""
        return self.var(self.index) - self.center

    def separation_value(self) -> RFunc:
        """Eigenvalue of the separation symmetry as a function of the index."""
        if self.sep_kind == "square":
            return self.sep_scale * self.centered() ** 2
        return self.sep_slope * self.var(self.index) + self.sep_offset

    def energy_value(self) -> RFunc:
        """Energy eigenvalue as a function of the auxiliary energy symbol."""
        aux = self.var(self.energy_aux)
        if self.energy_kind == "affine":
            return (aux - self.e_offset) / self.e_slope
        return ((aux - self.e_center) ** 2 - self.e_offset) / self.e_slope

    def energy_aux_value(self) -> RFunc:
        """aux as a function of E (affine kind only), in the extended ring."""
        if self.energy_kind != "affine":
            raise ValueError("energy auxiliary is not affine in E")
        E = self.ext_ring.rf(self.ext_ring.var(self.energy_symbol))
        return E * self.ext_ring.rf(self.e_slope) + self.ext_ring.rf(self.e_offset)

    def summary(self) -> dict:
        return {
            "system": self.id,
            "p": self.p,
            "q": self.q,
            "symbols": list(self.ring.symbols),
            "index": self.index,
            "parameters": list(self.params),
            "reflection_center": None if self.center is None else self.center.to_text(),
            "separation_symbol": self.separation_symbol,
            "separation_eigenvalue": self.separation_value().to_text(),
            "energy_symbol": self.energy_symbol,
            "energy_auxiliary": self.energy_aux,
            "energy_eigenvalue": self.energy_value().to_text(),
        }

    # -- diagonal rewriting -------------------------------------------------
    def diag_coefficient_to_form(self, c: MPoly) -> MPoly:
        """Rewrite a polynomial in (index, aux, params) as one in (E, L, params)."""
        X = self.ext_ring
        pc = X.coerce(c)
        # separation symbol
        if self.sep_kind == "square":
            centered = pc.shift(self.index, X.rf(self.center).as_poly())
            if not is_even_in(centered, self.index):
                raise NotEven(f"coefficient is not even in {self.index} about its center")
            y = even_part_in(centered, self.index)
            L = X.rf(X.var(self.separation_symbol))
            r = X.rf(y).subs({self.index: L / X.rf(self.sep_scale)})
        else:
            L = X.rf(X.var(self.separation_symbol))
            r = X.rf(pc).subs({self.index: (L - X.rf(self.sep_offset)) / X.rf(self.sep_slope)})
        # energy symbol
        E = X.rf(X.var(self.energy_symbol))
        if self.energy_kind == "affine":
            r = r.subs({self.energy_aux: E * X.rf(self.e_slope) + X.rf(self.e_offset)})
        else:
            num, den = r.num, r.den
            if not den.is_const():
                raise NotPolynomial("unexpected denominator before energy rewrite")
            centered = num.shift(self.energy_aux, X.rf(self.e_center).as_poly())
            if not is_even_in(centered, self.energy_aux):
                raise NotEven(f"coefficient is not even in {self.energy_aux} about its center")
            y = even_part_in(centered, self.energy_aux)
            r = X.rf(y).subs({self.energy_aux: E * X.rf(self.e_slope) + X.rf(self.e_offset)}) / X.rf(den)
        for sym, target, factor in self.square_rules:
            num, den = r.num, r.den
            if not den.is_const():
                raise NotPolynomial(f"denominator {den} before the {sym}^2 rule")
            if not is_even_in(num, sym):
                raise NotEven(f"form is not even in {sym}")
            y = even_part_in(num, sym)
            r = X.rf(y).subs({sym: X.rf(X.var(target)) * factor}) / X.rf(den)
        if not r.is_poly():
            raise NotPolynomial(f"rewritten form has denominator {r.den}")
        return self.diag_ring.coerce(r.as_poly())

    def form_to_coefficient(self, form: MPoly) -> RFunc:
        """Inverse map: evaluate a polynomial in (E, L, params) on the index lattice."""
        X = self.ext_ring
        f = X.rf(X.coerce(form))
        subs = {
            self.separation_symbol: X.rf(self.separation_value()),
            self.energy_symbol: X.rf(self.energy_value()),
        }
        for sym, target, factor in self.square_rules:
            subs[target] = X.rf(X.var(sym)) ** 2 / factor
        out = f.subs(subs)
        return self.ring.rf(out)


# ---------------------------------------------------------------------------
# factor recurrences


@dataclass(frozen=True)
class FactorStep:
    """One first-order (in the index sense) recurrence step.

    ``multiplier(state)`` returns the scalar produced when the step acts on the
    separated function whose indices are ``state``; ``updates`` says how the
    indices move.
    """

    name: str
    updates: Tuple[Tuple[str, Fraction], ...]
    multiplier: Callable[[Dict[str, RFunc]], RFunc]


def run_chain(state: Dict[str, RFunc], steps: Sequence[FactorStep]):
    """Apply steps in order (first element acts first); return (final state, product)."""
    st = dict(state)
    total = None
    for step in steps:
        m = step.multiplier(st)
        total = m if total is None else total * m
        for var, delta in step.updates:
            st[var] = st[var] + delta
    return st, total


@dataclass
class LadderPair:
    raise_: ShiftOp
    lower: ShiftOp
    raise_action: RFunc
    lower_action: RFunc
    raise_chain: List[str]
    lower_chain: List[str]
    checks: Dict[str, bool] = field(default_factory=dict)
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def raise_op(self) -> ShiftOp:
        return self.raise_


# ---------------------------------------------------------------------------
# model construction


def _check_pq(p: int, q: int):
    if not (isinstance(p, int) and isinstance(q, int)) or p < 1 or q < 1:
        raise ValueError(f"p, q must be positive integers (got {p}, {q})")
    if gcd(p, q) != 1:
        raise ValueError(f"p={p} and q={q} are not coprime")


def build_model(system: str, p: int, q: int) -> SystemModel:
    sid = canonical_id(system)
    _check_pq(p, q)
    return _BUILDERS[sid](p, q)


def _finish(m: SystemModel, extra_targets: Sequence[str] = ()) -> SystemModel:
    base = m.ring.symbols
    m.ext_ring = Ring(base + (m.energy_symbol, m.separation_symbol) + tuple(extra_targets))
    removed = {m.index, m.energy_aux} | {s for s, _, _ in m.square_rules}
    kept = tuple(s for s in base if s not in removed)
    m.diag_ring = Ring((m.energy_symbol, m.separation_symbol) + kept + tuple(extra_targets))
    return m


def _sphere_model(p, q) -> SystemModel:
    R = Ring(("N", "n", "a"))
    k = Fraction(p, q)
    m = SystemModel(
        id="sphere", p=p, q=q, ring=R, index="N", params=("a",),
        center=R.rf(Fraction(-1, 2)),
        separation_symbol="L2", sep_kind="square", sep_scale=R.rf(-k * k),
        energy_symbol="E", energy_aux="n", energy_kind="square",
        # (n + 1/2)^2 = 1/4 - E
        e_slope=R.rf(-1), e_offset=R.rf(Fraction(1, 4)), e_center=R.rf(Fraction(-1, 2)),
        step=q,
    )
    return _finish(m)


def _ce_model(p, q) -> SystemModel:
    R = Ring(("Omega", "beta"))
    m = SystemModel(
        id="complex_euclidean", p=p, q=q, ring=R, index="Omega", params=(),
        center=R.rf(0),
        separation_symbol="L2", sep_kind="square", sep_scale=R.rf(1),
        energy_symbol="E", energy_aux="beta", energy_kind="square",
        # beta^2 = -E
        e_slope=R.rf(-1), e_offset=R.rf(0), e_center=R.rf(0),
        step=p,
    )
    return _finish(m)


def _caged_model(p, q) -> SystemModel:
    R = Ring(("t", "u", "a1", "a2", "mu"))
    mu = R.rf(R.var("mu"))
    a1, a2 = R.rf(R.var("a1")), R.rf(R.var("a2"))
    mu1 = mu * p
    # E = -2 mu (q u + p a1 + p + q a2 + q)  =>  u = -E/(2 mu q) - (p a1 + p + q a2 + q)/q
    m = SystemModel(
        id="caged", p=p, q=q, ring=R, index="t", params=("a1", "a2", "mu"),
        center=None,
        separation_symbol="L1", sep_kind="affine",
        sep_slope=mu1 * (-4), sep_offset=mu1 * (-2) * (a1 + 1),
        energy_symbol="E", energy_aux="u", energy_kind="affine",
        e_slope=R.rf(-1) / (mu * (2 * q)),
        e_offset=-(a1 * p + p + a2 * q + q) / q,
        step=q,
    )
    return _finish(m)


def _ttw_like(p, q, sid: str, omega: str, energy: str, energy_scale: int) -> SystemModel:
    R = Ring(("s", "u", "a", "b", omega))
    k = Fraction(p, q)
    w = R.rf(R.var(omega))
    a, b = R.rf(R.var("a")), R.rf(R.var("b"))
    # energy_scale * energy = -2 w (2u + 1 + k(a+b+1))
    #   => u = -(energy_scale/(4 w)) energy - (1 + k(a+b+1))/2
    m = SystemModel(
        id=sid, p=p, q=q, ring=R, index="s", params=("a", "b", omega),
        center=R.rf(0),
        separation_symbol="L2", sep_kind="square", sep_scale=R.rf(-4 * k * k),
        energy_symbol=energy, energy_aux="u", energy_kind="affine",
        e_slope=R.rf(-energy_scale) / (w * 4),
        e_offset=-(R.rf(1) + (a + b + 1) * k) / 2,
        step=q,
    )
    return m


def _ttw_model(p, q) -> SystemModel:
    return _finish(_ttw_like(p, q, "ttw", "omega", "E", 1))


def _kepler_model(p, q) -> SystemModel:
    # TTW model after omega^2 -> 4H', E -> 4Z; "w" keeps the square root of 4H'
    m = _ttw_like(p, q, "kepler", "w", "Z", 4)
    m.params = ("a", "b", "Hp")
    m.square_rules = (("w", "Hp", Fraction(4)),)
    return _finish(m, extra_targets=("Hp",))


_BUILDERS = {
    "sphere": _sphere_model,
    "complex_euclidean": _ce_model,
    "caged": _caged_model,
    "ttw": _ttw_model,
    "kepler": _kepler_model,
}


# ---------------------------------------------------------------------------
# ladders


def build_ladders(model: SystemModel) -> LadderPair:
    return _LADDERS[model.id](model)


def _poch(x: RFunc, n: int) -> RFunc:
    return pochhammer(x, n)


def _require(cond: bool, what: str):
    if not cond:
        raise ConstructionMismatch(what)


def _sphere_ladders(m: SystemModel) -> LadderPair:
    p, q, k = m.p, m.q, m.k
    N, n, a = m.var("N"), m.var("n"), m.var("a")
    sig = N + Fraction(1, 2)
    sgn = (-1) ** (p + q)
    # separated indices: U^a_{nu_y}(y), T^{mu_x}_{n}(x)
    state = {"nu_y": N, "mu_x": sig * k}
    D_plus = FactorStep("D+_nu(y)", (("nu_y", Fraction(1)),), lambda st: -(st["nu_y"] - a + 1))
    C_plus = FactorStep("C+_mu(x)", (("mu_x", Fraction(1)),), lambda st: m.rf(-1))
    D_minus = FactorStep("D-_nu(y)", (("nu_y", Fraction(-1)),), lambda st: st["nu_y"] + a)
    C_minus = FactorStep(
        "C-_mu(x)", (("mu_x", Fraction(-1)),), lambda st: (n + st["mu_x"]) * (n - st["mu_x"] + 1)
    )
    up = [D_plus] * q + [C_plus] * p
    down = [D_minus] * q + [C_minus] * p
    st_up, c_plus = run_chain(state, up)
    st_dn, c_minus = run_chain(state, down)
    _require(st_up["nu_y"] == N + q and st_up["mu_x"] == (sig + q) * k, "sphere raise: index drift")
    _require(st_dn["nu_y"] == N - q and st_dn["mu_x"] == (sig - q) * k, "sphere lower: index drift")
    closed_plus = _poch(N - a + 1, q) * sgn
    closed_minus = _poch(-N - a, q) * _poch(-n - sig * k, p) * _poch(n - sig * k + 1, p) * sgn
    _require(c_plus == closed_plus, "sphere raise action differs from the closed form")
    _require(c_minus == closed_minus, "sphere lower action differs from the closed form")
    lp = LadderPair(
        raise_=m.single(q, c_plus), lower=m.single(-q, c_minus),
        raise_action=closed_plus, lower_action=closed_minus,
        raise_chain=[s.name for s in up], lower_chain=[s.name for s in down],
    )
    lp.checks["raise_closed_form"] = True
    lp.checks["lower_closed_form"] = True
    # reflection holds for the differential operators; on multipliers it shows up
    # as F1(-N-1) = F2(N) for the gauge-invariant products
    F1 = c_minus * c_plus.shift("N", -q)
    F2 = c_plus * c_minus.shift("N", q)
    lp.checks["F1(-N-1)=F2(N)"] = F1.reflect("N", m.center) == F2
    lp.checks["F_j(-n-1)=F_j(n)"] = (
        F1.subs({"n": -n - 1}) == F1 and F2.subs({"n": -n - 1}) == F2
    )
    return lp


@dataclass(frozen=True)
class FirstOrder:
    """a*d/dz + c/z  (z = r or w), with c a function of the index."""

    var: str
    dsign: int
    c: RFunc

    def negated(self) -> "FirstOrder":
        return FirstOrder(self.var, -self.dsign, -self.c)


def _ce_ladders(m: SystemModel) -> LadderPair:
    p, q = m.p, m.q
    Om, beta = m.var("Omega"), m.var("beta")
    state = {"nu_r": Om, "nu_w": Om * Fraction(q, p)}
    # (-d + nu/z) C_nu(z) = C_{nu+1}(z); (d + nu/z) C_nu(z) = C_{nu-1}(z); z = beta r or w
    r_up = FactorStep("(-d_r+nu/r)", (("nu_r", Fraction(1)),), lambda st: beta)
    w_up = FactorStep("(-d_w+nu/w)", (("nu_w", Fraction(1)),), lambda st: m.rf(1))
    r_dn = FactorStep("(d_r+nu/r)", (("nu_r", Fraction(-1)),), lambda st: beta)
    w_dn = FactorStep("(d_w+nu/w)", (("nu_w", Fraction(-1)),), lambda st: m.rf(1))
    up = [r_up] * p + [w_up] * q
    down = [r_dn] * p + [w_dn] * q
    st_up, c_plus = run_chain(state, up)
    st_dn, c_minus = run_chain(state, down)
    _require(st_up["nu_r"] == Om + p and st_up["nu_w"] == (Om + p) * Fraction(q, p), "CE raise drift")
    _require(st_dn["nu_r"] == Om - p and st_dn["nu_w"] == (Om - p) * Fraction(q, p), "CE lower drift")
    closed = beta ** p
    _require(c_plus == closed and c_minus == closed, "CE actions differ from beta^p")
    lp = LadderPair(
        raise_=m.single(p, c_plus), lower=m.single(-p, c_minus),
        raise_action=closed, lower_action=closed,
        raise_chain=[s.name for s in up], lower_chain=[s.name for s in down],
    )
    lp.checks["raise_closed_form"] = lp.checks["lower_closed_form"] = True
    # first-order factor chains (application order) and Phi_-(-Omega) = (-1)^{p+q} Phi_+(Omega)
    plus = [FirstOrder("r", -1, Om + j) for j in range(p)] + [
        FirstOrder("w", -1, Om * Fraction(q, p) + j) for j in range(q)
    ]
    minus = [FirstOrder("r", 1, Om - j) for j in range(p)] + [
        FirstOrder("w", 1, Om * Fraction(q, p) - j) for j in range(q)
    ]
    flipped = [FirstOrder(f.var, f.dsign, f.c.subs({"Omega": -Om})) for f in minus]
    # each flipped factor is -1 times the matching raising factor
    lp.checks["Phi-(-Omega)=(-1)^(p+q)Phi+(Omega)"] = all(
        f == g.negated() for f, g in zip(flipped, plus)
    ) and len(flipped) == p + q
    lp.extra["parity_sign"] = (-1) ** (p + q)
    lp.checks["reflect(raise)=lower"] = reflect(lp.raise_, m.center) == lp.lower
    return lp


def _caged_ladders(m: SystemModel) -> LadderPair:
    p, q, k = m.p, m.q, m.k
    t, u, a1, a2, mu = (m.var(x) for x in ("t", "u", "a1", "a2", "mu"))
    mu1, mu2 = mu * p, mu * q
    state = {"n": t, "m": u - t * k}
    Dp1 = FactorStep("D+(mu1,x)", (("n", Fraction(1)),), lambda st: mu1 * (-4) * (st["n"] + 1))
    Dm1 = FactorStep("D-(mu1,x)", (("n", Fraction(-1)),), lambda st: mu1 * (-4) * (st["n"] + a1))
    Dp2 = FactorStep("D+(mu2,y)", (("m", Fraction(1)),), lambda st: mu2 * (-4) * (st["m"] + 1))
    Dm2 = FactorStep("D-(mu2,y)", (("m", Fraction(-1)),), lambda st: mu2 * (-4) * (st["m"] + a2))
    up = [Dp1] * q + [Dm2] * p
    down = [Dm1] * q + [Dp2] * p
    st_up, c_plus = run_chain(state, up)
    st_dn, c_minus = run_chain(state, down)
    _require(st_up["n"] == t + q and st_up["m"] == u - (t + q) * k, "caged raise drift")
    _require(st_dn["n"] == t - q and st_dn["m"] == u - (t - q) * k, "caged lower drift")
    closed_plus = (mu1 * -4) ** q * (mu2 * 4) ** p * _poch(t + 1, q) * _poch(-u + t * k - a2, p)
    closed_minus = (mu1 * 4) ** q * (mu2 * -4) ** p * _poch(-t - a1, q) * _poch(u - t * k + 1, p)
    _require(c_plus == closed_plus, "caged raise action differs from the closed form")
    _require(c_minus == closed_minus, "caged lower action differs from the closed form")
    lp = LadderPair(
        raise_=m.single(q, c_plus), lower=m.single(-q, c_minus),
        raise_action=closed_plus, lower_action=closed_minus,
        raise_chain=[s.name for s in up], lower_chain=[s.name for s in down],
    )
    lp.checks["raise_closed_form"] = lp.checks["lower_closed_form"] = True
    alt = (mu1 * -4) ** q * (mu2 * 4) ** p * _poch(-t - a1, q) * _poch(-u - t * k + 1, p)
    lp.extra["model_lowering_display_matches"] = alt == c_minus
    return lp


def _ttw_ladders(m: SystemModel) -> LadderPair:
    """Jacobi/radial chains in the index n, then the gauge to s = n + (a+b+1)/2."""
    p, q, k = m.p, m.q, m.k
    om = m.ring.symbols[4]  # omega (TTW) or w (Kepler)
    W = Ring(("n", "s", "u", "a", "b", om))
    n, s, u, a, b, w = (W.rf(W.var(x)) for x in ("n", "s", "u", "a", "b", om))
    A = (n * 2 + a + b + 1) * k
    state = {"n": n, "A": A, "m": u - n * k}
    Jp = FactorStep("J+_n", (("n", Fraction(1)),), lambda st: (st["n"] + 1) * (st["n"] + a + b + 1) * 2)
    Jm = FactorStep("J-_n", (("n", Fraction(-1)),), lambda st: (st["n"] + a) * (st["n"] + b) * 2)
    Kp = FactorStep("K+_{A,m}", (("A", Fraction(2)), ("m", Fraction(-1))), lambda st: -w)
    Km = FactorStep(
        "K-_{A,m}", (("A", Fraction(-2)), ("m", Fraction(1))),
        lambda st: -w * (st["m"] + 1) * (st["m"] + st["A"]),
    )
    up = [Jp] * q + [Kp] * p
    down = [Jm] * q + [Km] * p
    st_up, c_plus = run_chain(state, up)
    st_dn, c_minus = run_chain(state, down)
    _require(
        st_up["n"] == n + q and st_up["A"] == A.subs({"n": n + q}) and st_up["m"] == u - (n + q) * k,
        "TTW raise drift",
    )
    _require(
        st_dn["n"] == n - q and st_dn["A"] == A.subs({"n": n - q}) and st_dn["m"] == u - (n - q) * k,
        "TTW lower drift",
    )
    closed_plus = w ** p * 2 ** q * (-1) ** p * _poch(n + 1, q) * _poch(n + a + b + 1, q)
    closed_minus = (
        w ** p * 2 ** q * _poch(-n - a, q) * _poch(-n - b, q)
        * _poch(u - n * k + 1, p) * _poch(-u - (n + a + b + 1) * k, p)
    )
    _require(c_plus == closed_plus, "TTW raise action differs from the closed form")
    _require(c_minus == closed_minus, "TTW lower action differs from the closed form")
    # gauge Phi_n = g(n) Psi_n with g(n)/g(n-q) given below
    ratio = _poch(n - q + 1, q) / (_poch(-u - (n + a + b + 1) * k, p) * _poch(-n - a, q))
    g_plus = c_plus / ratio.subs({"n": n + q})
    g_minus = c_minus * ratio
    to_s = {"n": s - (a + b + 1) / 2}
    gp = m.ring.rf(g_plus.subs(to_s))
    gm = m.ring.rf(g_minus.subs(to_s))
    _require(gp.is_poly() and gm.is_poly(), "gauged TTW coefficients are not polynomial")
    lp = LadderPair(
        raise_=m.single(q, gp), lower=m.single(-q, gm),
        raise_action=gp, lower_action=gm,
        raise_chain=[x.name for x in up], lower_chain=[x.name for x in down],
    )
    lp.checks["raise_closed_form"] = lp.checks["lower_closed_form"] = True
    lp.checks["reflect(raise)=lower"] = reflect(lp.raise_, m.center) == lp.lower
    # closed form of the gauged coefficient
    Sv, uv, av, bv, wv = (m.var(x) for x in ("s", "u", "a", "b", om))
    c_ab = (av + bv + 1) / 2
    gauged_closed = (
        wv ** p * 2 ** q * (-1) ** q
        * _poch(Sv + (av - bv + 1) / 2, q) * _poch(Sv + c_ab, q) * _poch(uv + (Sv + c_ab) * k + 1, p)
    )
    lp.checks["gauged_closed_form"] = gauged_closed == gp
    lp.extra["printed_actions_n"] = {"raise": closed_plus.to_text(), "lower": closed_minus.to_text()}
    lp.extra["ungauged_plus"] = c_plus
    lp.extra["ungauged_minus"] = c_minus
    lp.extra["work_ring"] = W
    # the one-variable display of L4 carries 2^{q-1}/s times the bare Pochhammer product
    display = _poch(Sv + (av - bv + 1) / 2, q) * _poch(Sv + c_ab, q) * _poch(uv + (Sv + c_ab) * k + 1, p)
    display = display * 2 ** (q - 1) / Sv
    ours = gp / (Sv * 2)
    lp.extra["L4_display_ratio"] = (ours / display)
    return lp


_LADDERS = {
    "sphere": _sphere_ladders,
    "complex_euclidean": _ce_ladders,
    "caged": _caged_ladders,
    "ttw": _ttw_ladders,
    "kepler": _ttw_ladders,
}


# ---------------------------------------------------------------------------
# symmetrized generators


def l4_divisor(model: SystemModel) -> Optional[RFunc]:
    if model.id == "caged":
        return None
    if model.id in ("ttw", "kepler"):
        return model.centered() * 2
    return model.centered()


def symmetrize(model: SystemModel, ladders: LadderPair) -> Tuple[ShiftOp, ShiftOp]:
    """Return (L3, L4).  Division by the centered index acts on the source index."""
    Xp, Xm = ladders.raise_, ladders.lower
    if model.id == "caged":
        return Xp + Xm, Xp - Xm
    if model.id == "complex_euclidean" and (model.p + model.q) % 2:
        even, odd = Xp - Xm, Xp + Xm
    else:
        even, odd = Xp + Xm, Xp - Xm
    d = l4_divisor(model)
    L3 = even
    L4 = mul(odd, model.diag(d.inverse()))
    if model.center is not None and model.id != "sphere":
        # on multipliers the CE factor sign (-1)^{p+q} shows up as a parity
        parity = (-1) ** (model.p + model.q) if model.id == "complex_euclidean" else 1
        for op in (L3, L4):
            if reflect(op, model.center) != op.scale(parity):
                raise NotEven("symmetrized generators are not reflection invariant")
        if parity == 1:
            _certify_even_polys(model, L3)
            _certify_even_polys(model, L4)
    return L3, L4


def _certify_even_polys(model: SystemModel, op: ShiftOp, top: int = 2):
    """Function-model image of index^(2j), j <= top, must be an even polynomial.

    The odd numerator is divided exactly by the divisor, so a failure surfaces as
    NotDivisible or NotEven.
    """
    x = model.var(model.index)
    d = l4_divisor(model)
    dpoly = d.as_poly() if d is not None else None
    for j in range(top + 1):
        acc = model.rf(0)
        for sh, c in op.terms.items():
            acc = acc + c * (x + sh) ** (2 * j)
        if not acc.is_poly():
            num = (acc * d).as_poly()
            quotient = exact_div(num, dpoly)
            if not is_even_in(quotient, model.index):
                raise NotEven(f"image of {model.index}^{2*j} is not even")
        elif not is_even_in(acc.as_poly(), model.index):
            raise NotEven(f"image of {model.index}^{2*j} is not even")
