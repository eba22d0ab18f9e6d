"""Floating-point cross-checks of the factor recurrences and separated ODEs.

Special functions are evaluated from their hypergeometric series with
compensated summation, carrying the first two derivatives along (a small
second-order jet type), so ODE residuals need no finite differences.
Non-integer degrees are allowed everywhere.

Residuals are relative: |sum of terms| / max |term|.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

DEFAULT_TOL = 1e-10
CHAIN_TOL = 1e-8
EDGE = 0.05  # keep |x -+ 1| > EDGE
R_MIN = 0.1


class DomainError(ValueError):
    pass


class SeriesError(ArithmeticError):
    """The series did not reach the requested accuracy."""


# ---------------------------------------------------------------------------
# jets: value with first and second derivative


class Jet:
    __slots__ = ("v", "d", "dd")

    def __init__(self, v, d=0.0, dd=0.0):
        self.v, self.d, self.dd = v, d, dd

    @staticmethod
    def var(x) -> "Jet":
        return Jet(x, 1.0, 0.0)

    def _lift(self, o) -> "Jet":
        return o if isinstance(o, Jet) else Jet(o)

    def __add__(self, o):
        o = self._lift(o)
        return Jet(self.v + o.v, self.d + o.d, self.dd + o.dd)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.d, -self.dd)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        return Jet(self.v * o.v, self.d * o.v + self.v * o.d,
                   self.dd * o.v + 2 * self.d * o.d + self.v * o.dd)

    __rmul__ = __mul__

    def recip(self) -> "Jet":
        r = 1 / self.v
        return Jet(r, -self.d * r * r, 2 * self.d * self.d * r ** 3 - self.dd * r * r)

    def __truediv__(self, o):
        return self * self._lift(o).recip()

    def __rtruediv__(self, o):
        return self._lift(o) * self.recip()

    def apply(self, f0, f1, f2) -> "Jet":
        """Compose with an outer function whose value and derivatives at self.v are given."""
        return Jet(f0, f1 * self.d, f2 * self.d * self.d + f1 * self.dd)

    def __pow__(self, c):
        v = self.v
        if c == 0:
            return Jet(1.0)
        p0 = v ** c
        p1 = c * v ** (c - 1)
        p2 = c * (c - 1) * v ** (c - 2) if c != 1 else 0.0
        return self.apply(p0, p1, p2)

    def __repr__(self):
        return f"Jet({self.v}, {self.d}, {self.dd})"


def jexp(j: Jet) -> Jet:
    e = cmath.exp(j.v) if isinstance(j.v, complex) else math.exp(j.v)
    return j.apply(e, e, e)


def jsin(j: Jet) -> Jet:
    return j.apply(math.sin(j.v), math.cos(j.v), -math.sin(j.v))


def jcos(j: Jet) -> Jet:
    return j.apply(math.cos(j.v), -math.sin(j.v), -math.cos(j.v))


def rgamma(x: float) -> float:
    """1/Gamma(x), zero at the poles."""
    try:
        return 1.0 / math.gamma(x)
    except (ValueError, OverflowError):
        if x <= 0 and x == int(x):
            return 0.0
        raise


# ---------------------------------------------------------------------------
# hypergeometric series


def _csum(values: Sequence) -> complex:
    if any(isinstance(v, complex) for v in values):
        return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))
    return math.fsum(values)


def hyp_series(a: Sequence[float], b: Sequence[float], z, max_terms: int = 40000,
               eps: float = 1e-17) -> Tuple[complex, complex, complex]:
    """pFq(a; b; z) and its first two z-derivatives, by direct summation."""
    s0, s1, s2 = [1.0], [], []
    quiet = 0
    term = 1.0  # coefficient c_k (without z^k)
    zpow = 1.0
    zprev = 0.0
    zprev2 = 0.0
    for k in range(max_terms):
        num = 1.0
        for x in a:
            num *= x + k
        den = float(k + 1)
        for x in b:
            den *= x + k
        if den == 0:
            raise DomainError("lower parameter at a nonpositive integer")
        # c_{k+1} = c_k * num/den ; derivative terms use c_{k+1} (k+1) z^k etc.
        term = term * num / den
        zprev2, zprev, zpow = zprev, zpow, zpow * z
        t0 = term * zpow
        t1 = term * (k + 1) * zprev
        t2 = term * (k + 1) * k * zprev2 if k >= 1 else 0.0
        s0.append(t0)
        s1.append(t1)
        if k >= 1:
            s2.append(t2)
        if term == 0:
            break
        size = max(abs(t0), abs(t1), abs(t2))
        ref = max(abs(s0[0]), max(abs(x) for x in s0[-8:]), 1e-300)
        if size <= eps * ref * 1e-1 or size == 0:
            quiet += 1
            if quiet >= 4:
                break
        else:
            quiet = 0
    else:
        raise SeriesError(f"pFq series did not converge in {max_terms} terms at z={z}")
    return _csum(s0), _csum(s1) if s1 else 0.0, _csum(s2) if s2 else 0.0


def hyp_jet(a, b, zj: Jet) -> Jet:
    f0, f1, f2 = hyp_series(a, b, zj.v)
    return zj.apply(f0, f1, f2)


# ---------------------------------------------------------------------------
# special functions (first kind), as jets in their argument


def ferrers_p(nu: float, mu: float, x: Jet) -> Jet:
    """Ferrers (on-the-cut) Legendre function P^mu_nu(x), -1 < x < 1."""
    if not (-1 + EDGE <= x.v <= 1 - EDGE):
        raise DomainError(f"x={x.v} too close to +-1")
    pre = ((1 + x) / (1 - x)) ** (mu / 2)
    z = (1 - x) * 0.5
    return pre * hyp_jet([-nu, nu + 1], [1 - mu], z) * rgamma(1 - mu)


def jacobi_p(n: float, al: float, be: float, x: Jet) -> Jet:
    """Jacobi function P^(al,be)_n(x) from its 2F1 expression."""
    if not (-1 + EDGE <= x.v <= 1 - EDGE):
        raise DomainError(f"x={x.v} too close to +-1")
    c = math.gamma(n + al + 1) * rgamma(n + 1) * rgamma(al + 1)
    return hyp_jet([-n, n + al + be + 1], [al + 1], (1 - x) * 0.5) * c


def laguerre_l(n: float, al: float, z: Jet) -> Jet:
    c = math.gamma(n + al + 1) * rgamma(n + 1) * rgamma(al + 1)
    return hyp_jet([-n], [al + 1], z) * c


def bessel_j(nu: float, z: Jet) -> Jet:
    if abs(z.v) < R_MIN:
        raise DomainError(f"|z|={abs(z.v)} below {R_MIN}")
    pre = (z * 0.5) ** nu
    return pre * hyp_jet([], [nu + 1], z * z * -0.25) * rgamma(nu + 1)


@dataclass(frozen=True)
class FnSpec:
    family: str  # LegendreP | JacobiP | LaguerreL | BesselJ | ConfluentSeries
    params: Tuple[Tuple[str, float], ...]
    domain: Tuple[float, float] = (-1 + EDGE, 1 - EDGE)

    def p(self, name):
        return dict(self.params)[name]


def eval_fn(spec: FnSpec, x) -> Jet:
    """Value, first and second derivative at x."""
    lo, hi = spec.domain
    xv = x.real if isinstance(x, complex) else x
    if spec.family != "BesselJ" and not (lo <= xv <= hi):
        raise DomainError(f"{x} outside {spec.domain}")
    xj = Jet.var(x)
    f = spec.family
    if f == "LegendreP":
        return ferrers_p(spec.p("nu"), spec.p("mu"), xj)
    if f == "JacobiP":
        return jacobi_p(spec.p("n"), spec.p("alpha"), spec.p("beta"), xj)
    if f == "LaguerreL":
        return laguerre_l(spec.p("n"), spec.p("alpha"), xj)
    if f == "BesselJ":
        return bessel_j(spec.p("nu"), xj)
    if f == "ConfluentSeries":
        return hyp_jet([spec.p("a")], [spec.p("b")], xj)
    raise ValueError(f"unknown family {f}")


# ---------------------------------------------------------------------------
# results


@dataclass
class CheckResult:
    identity: str
    points: List[float]
    max_residual: float
    tolerance: float
    params: Dict[str, float] = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "n_points": len(self.points),
            "max_residual": float(f"{self.max_residual:.3e}"),
            "tolerance": self.tolerance,
            "params": {k: round(v, 12) for k, v in sorted(self.params.items())},
            "status": "pass" if self.passed else "fail",
            "detail": self.detail,
        }


def _rel(terms: Sequence) -> float:
    scale = max(abs(t) for t in terms)
    if scale == 0:
        return 0.0
    return abs(_csum(list(terms))) / scale


def sample_points(lo: float, hi: float, n: int, seed) -> List[float]:
    rng = random.Random(seed)
    return sorted(lo + (hi - lo) * rng.random() for _ in range(n))


def _run(identity: str, fn: Callable[[float], Sequence], pts, tol, params, detail="") -> CheckResult:
    worst = max(_rel(fn(x)) for x in pts)
    return CheckResult(identity, list(pts), worst, tol, dict(params), detail)


# ---------------------------------------------------------------------------
# factor recurrences: each returns the list of terms that must sum to zero


def _sphere_T(nu, mu, x):
    return ferrers_p(nu, mu, Jet.var(x))


def legendre_D_plus(pr, x):
    nu, mu = pr["nu"], pr["mu"]
    T = _sphere_T(nu, mu, x)
    T1 = _sphere_T(nu + 1, mu, x).v
    return [(1 - x * x) * T.d, -(nu + 1) * x * T.v, (nu - mu + 1) * T1]


def legendre_D_minus(pr, x):
    nu, mu = pr["nu"], pr["mu"]
    T = _sphere_T(nu, mu, x)
    T1 = _sphere_T(nu - 1, mu, x).v
    return [(1 - x * x) * T.d, nu * x * T.v, -(nu + mu) * T1]


def legendre_C_plus(pr, x):
    nu, mu = pr["nu"], pr["mu"]
    T = _sphere_T(nu, mu, x)
    w = math.sqrt(1 - x * x)
    return [w * T.d, mu * x / w * T.v, _sphere_T(nu, mu + 1, x).v]


def legendre_C_minus(pr, x):
    nu, mu = pr["nu"], pr["mu"]
    T = _sphere_T(nu, mu, x)
    w = math.sqrt(1 - x * x)
    return [w * T.d, -mu * x / w * T.v, -(nu + mu) * (nu - mu + 1) * _sphere_T(nu, mu - 1, x).v]


def laguerre_zd_lower(pr, z):
    n, al = pr["n"], pr["alpha"]
    L = laguerre_l(n, al, Jet.var(z))
    return [z * L.d, -n * L.v, (n + al) * laguerre_l(n - 1, al, Jet.var(z)).v]


def laguerre_zd_raise(pr, z):
    n, al = pr["n"], pr["alpha"]
    L = laguerre_l(n, al, Jet.var(z))
    return [z * L.d, -(n + 1) * laguerre_l(n + 1, al, Jet.var(z)).v, (n + 1 + al - z) * L.v]


def caged_X(n, a1, mu1, x) -> Jet:
    xj = Jet.var(x)
    return jexp(xj * xj * (-mu1 / 2)) * xj ** (a1 + 0.5) * laguerre_l(n, a1, xj * xj * mu1)


def caged_D_plus(pr, x):
    n, a1, mu1 = pr["n"], pr["a"], pr["mu"]
    X = caged_X(n, a1, mu1, x)
    return [X.dd, -2 * x * mu1 * X.d, (-mu1 + mu1 * mu1 * x * x + (0.25 - a1 * a1) / (x * x)) * X.v,
            4 * mu1 * (n + 1) * caged_X(n + 1, a1, mu1, x).v]


def caged_D_minus(pr, x):
    n, a1, mu1 = pr["n"], pr["a"], pr["mu"]
    X = caged_X(n, a1, mu1, x)
    return [X.dd, 2 * x * mu1 * X.d, (mu1 + mu1 * mu1 * x * x + (0.25 - a1 * a1) / (x * x)) * X.v,
            4 * mu1 * (n + a1) * caged_X(n - 1, a1, mu1, x).v]


def ttw_X(n, a, b, x) -> Jet:
    """P^(b,a)_n(-x): a solution of the (a,b) Jacobi equation obeying J+- as displayed."""
    # evaluated on the jet (-x, -1, 0), so derivatives come out in x
    return jacobi_p(n, b, a, Jet(-x, -1.0, 0.0))


def jacobi_J_plus(pr, x):
    n, a, b = pr["n"], pr["a"], pr["b"]
    X = ttw_X(n, a, b, x)
    return [(2 * n + a + b + 2) * (1 - x * x) * X.d,
            (n + a + b + 1) * (-(2 * n + a + b + 2) * x - (a - b)) * X.v,
            -2 * (n + 1) * (n + a + b + 1) * ttw_X(n + 1, a, b, x).v]


def jacobi_J_minus(pr, x):
    n, a, b = pr["n"], pr["a"], pr["b"]
    X = ttw_X(n, a, b, x)
    return [-(2 * n + a + b) * (1 - x * x) * X.d,
            -n * ((2 * n + a + b) * x - (a - b)) * X.v,
            -2 * (n + a) * (n + b) * ttw_X(n - 1, a, b, x).v]


def jacobi_J_plus_standard(pr, x):
    """J+ applied to the standard P^(a,b)_n(x), for the record."""
    n, a, b = pr["n"], pr["a"], pr["b"]
    X = jacobi_p(n, a, b, Jet.var(x))
    return [(2 * n + a + b + 2) * (1 - x * x) * X.d,
            (n + a + b + 1) * (-(2 * n + a + b + 2) * x - (a - b)) * X.v,
            -2 * (n + 1) * (n + a + b + 1) * jacobi_p(n + 1, a, b, Jet.var(x)).v]


def ttw_Y(A, m, w, R) -> Jet:
    """Y^A_m(R) = w^{A/2} e^{-wR/2} R^{A/2} L^A_m(wR)."""
    Rj = Jet.var(R)
    return jexp(Rj * (-w / 2)) * Rj ** (A / 2) * laguerre_l(m, A, Rj * w) * w ** (A / 2)


def ttw_K_plus(pr, R):
    A, m, w = pr["A"], pr["m"], pr["omega"]
    E = -2 * w * (2 * m + A + 1)
    Y = ttw_Y(A, m, w, R)
    return [(A + 1) * Y.d, -E / 4 * Y.v, -A * (A + 1) / (2 * R) * Y.v, w * ttw_Y(A + 2, m - 1, w, R).v]


def ttw_K_minus(pr, R):
    A, m, w = pr["A"], pr["m"], pr["omega"]
    E = -2 * w * (2 * m + A + 1)
    Y = ttw_Y(A, m, w, R)
    return [(1 - A) * Y.d, -E / 4 * Y.v, A * (1 - A) / (2 * R) * Y.v,
            w * (m + 1) * (m + A) * ttw_Y(A - 2, m + 1, w, R).v]


def bessel_r_up(pr, r):
    nu, beta = pr["nu"], pr["beta"]
    rj = Jet.var(r)
    J = bessel_j(nu, rj * beta)
    return [-J.d, nu / r * J.v, -beta * bessel_j(nu + 1, rj * beta).v]


def bessel_r_down(pr, r):
    nu, beta = pr["nu"], pr["beta"]
    rj = Jet.var(r)
    J = bessel_j(nu, rj * beta)
    return [J.d, nu / r * J.v, -beta * bessel_j(nu - 1, rj * beta).v]


def _w_point(pr, phi) -> complex:
    return pr["delta"] * cmath.exp(1j * phi)


def bessel_w_up(pr, phi):
    nu = pr["nu"]
    w = _w_point(pr, phi)
    J = bessel_j(nu, Jet.var(w))
    return [-J.d, nu / w * J.v, -bessel_j(nu + 1, Jet.var(w)).v]


def bessel_w_down(pr, phi):
    nu = pr["nu"]
    w = _w_point(pr, phi)
    J = bessel_j(nu, Jet.var(w))
    return [J.d, nu / w * J.v, -bessel_j(nu - 1, Jet.var(w)).v]


@dataclass(frozen=True)
class Identity:
    id: str
    fn: Callable
    domain: Tuple[float, float]
    description: str


RECURRENCES: Dict[str, Identity] = {
    i.id: i for i in [
        Identity("legendre.D+", legendre_D_plus, (-0.9, 0.9), "(1-x^2)T' - (nu+1)xT = -(nu-mu+1)T_{nu+1}"),
        Identity("legendre.D-", legendre_D_minus, (-0.9, 0.9), "(1-x^2)T' + nu xT = (nu+mu)T_{nu-1}"),
        Identity("legendre.C+", legendre_C_plus, (-0.9, 0.9), "sqrt(1-x^2)T' + mu x T/sqrt(1-x^2) = -T^{mu+1}"),
        Identity("legendre.C-", legendre_C_minus, (-0.9, 0.9),
                 "sqrt(1-x^2)T' - mu x T/sqrt(1-x^2) = (nu+mu)(nu-mu+1)T^{mu-1}"),
        Identity("laguerre.zD-", laguerre_zd_lower, (0.1, 4.0), "z L' = n L_n - (n+alpha) L_{n-1}"),
        Identity("laguerre.zD+", laguerre_zd_raise, (0.1, 4.0), "z L' = (n+1) L_{n+1} - (n+1+alpha-z) L_n"),
        Identity("caged.D+", caged_D_plus, (0.2, 2.0), "D+(mu,x) X_n = -4mu(n+1) X_{n+1}"),
        Identity("caged.D-", caged_D_minus, (0.2, 2.0), "D-(mu,x) X_n = -4mu(n+a) X_{n-1}"),
        Identity("jacobi.J+", jacobi_J_plus, (-0.9, 0.9), "J+_n X_n = 2(n+1)(n+a+b+1) X_{n+1}"),
        Identity("jacobi.J-", jacobi_J_minus, (-0.9, 0.9), "J-_n X_n = 2(n+a)(n+b) X_{n-1}"),
        Identity("radial.K+", ttw_K_plus, (0.2, 3.0), "K+_{A,m} Y^A_m = -w Y^{A+2}_{m-1}"),
        Identity("radial.K-", ttw_K_minus, (0.2, 3.0), "K-_{A,m} Y^A_m = -w(m+1)(m+A) Y^{A-2}_{m+1}"),
        Identity("bessel.r+", bessel_r_up, (0.2, 4.0), "(-d_r + nu/r) J_nu(beta r) = beta J_{nu+1}(beta r)"),
        Identity("bessel.r-", bessel_r_down, (0.2, 4.0), "(d_r + nu/r) J_nu(beta r) = beta J_{nu-1}(beta r)"),
        Identity("bessel.w+", bessel_w_up, (-1.2, 1.2), "(-d_w + nu/w) J_nu(w) = J_{nu+1}(w), w = delta e^{i phi}"),
        Identity("bessel.w-", bessel_w_down, (-1.2, 1.2), "(d_w + nu/w) J_nu(w) = J_{nu-1}(w), w = delta e^{i phi}"),
    ]
}


def check_recurrence(identity: str, params: Dict[str, float], points: Sequence[float],
                     tol: float = DEFAULT_TOL) -> CheckResult:
    idn = RECURRENCES[identity]
    if len(points) < 16:
        raise ValueError("need at least 16 sample points")
    return _run(identity, lambda x: idn.fn(params, x), points, tol, params, idn.description)


# ---------------------------------------------------------------------------
# separated ODEs


def ode_sphere_polar(pr, th):
    k, N, n = pr["k"], pr["N"], pr["n"]
    mu = k * (N + 0.5)
    tj = Jet.var(th)
    Th = ferrers_p(n, mu, jcos(tj))
    s, c = math.sin(th), math.cos(th)
    return [Th.dd, c / s * Th.d, -mu * mu / (s * s) * Th.v, n * (n + 1) * Th.v]


def ode_sphere_angular(pr, ph):
    k, N, a = pr["k"], pr["N"], pr["a"]
    psi = Jet.var(ph) * k
    Ph = jcos(psi) ** 0.5 * ferrers_p(N, a, jsin(psi))
    c = math.cos(k * ph)
    return [Ph.dd, k * k * (0.25 - a * a) / (c * c) * Ph.v, k * k * (N + 0.5) ** 2 * Ph.v]


def ode_ce_angular(pr, th):
    k, Om, delta = pr["k"], pr["Omega"], pr["delta"]
    e = cmath.exp(1j * k * th)
    w = Jet(delta * e, 1j * k * delta * e, -k * k * delta * e)
    Th = bessel_j(Om / k, w)
    return [Th.dd, -k * k * delta * delta * e * e * Th.v, Om * Om * Th.v]


def ode_ce_radial(pr, r):
    Om, beta = pr["Omega"], pr["beta"]
    R = bessel_j(Om, Jet.var(r) * beta)
    return [R.dd, R.d / r, -Om * Om / (r * r) * R.v, beta * beta * R.v]


def ode_caged_x(pr, x):
    n, a1, mu1 = pr["n"], pr["a"], pr["mu"]
    X = caged_X(n, a1, mu1, x)
    lam = -2 * mu1 * (2 * n + a1 + 1)
    return [X.dd, -mu1 * mu1 * x * x * X.v, (0.25 - a1 * a1) / (x * x) * X.v, -lam * X.v]


def ode_ttw_angular(pr, th):
    k, n, a, b = pr["k"], pr["n"], pr["a"], pr["b"]
    t = Jet.var(th) * k
    Th = jsin(t) ** (a + 0.5) * jcos(t) ** (b + 0.5) * jacobi_p(n, a, b, jcos(t * 2))
    A = k * (2 * n + a + b + 1)
    s, c = math.sin(k * th), math.cos(k * th)
    al, be = k * k * (0.25 - a * a), k * k * (0.25 - b * b)
    return [Th.dd, al / (s * s) * Th.v, be / (c * c) * Th.v, A * A * Th.v]


def ode_ttw_radial(pr, r):
    A, m, w = pr["A"], pr["m"], pr["omega"]
    rj = Jet.var(r)
    S = jexp(rj * rj * (-w / 2)) * rj ** A * laguerre_l(m, A, rj * rj * w)
    E = -2 * w * (2 * m + A + 1)
    return [S.dd, S.d / r, -w * w * r * r * S.v, -A * A / (r * r) * S.v, -E * S.v]


ODES: Dict[str, Identity] = {
    i.id: i for i in [
        Identity("sphere.polar", ode_sphere_polar, (0.5, 2.6), "Theta'' + cot Theta' - mu^2/sin^2 Theta = -n(n+1) Theta"),
        Identity("sphere.angular", ode_sphere_angular, (-1.0, 1.0), "Phi'' + k^2(1/4-a^2)/cos^2(k phi) Phi = -k^2(N+1/2)^2 Phi"),
        Identity("ce.angular", ode_ce_angular, (-1.0, 1.0), "Theta'' - k^2 delta^2 e^{2ik theta} Theta + Omega^2 Theta = 0"),
        Identity("ce.radial", ode_ce_radial, (0.2, 4.0), "R'' + R'/r - Omega^2/r^2 R = -beta^2 R"),
        Identity("caged.x", ode_caged_x, (0.2, 2.0), "X'' - mu1^2 x^2 X + (1/4-a1^2)/x^2 X = lambda_x X"),
        Identity("ttw.angular", ode_ttw_angular, (0.0, 0.0), "L2~ Theta = -A^2 Theta"),
        Identity("ttw.radial", ode_ttw_radial, (0.3, 2.5), "S'' + S'/r - w^2 r^2 S - A^2/r^2 S = E S"),
    ]
}


def _ode_domain(identity: str, params) -> Tuple[float, float]:
    lo, hi = ODES[identity].domain
    k = params.get("k", 1.0)
    if identity == "ttw.angular":
        # cos(2k theta) inside (-0.9, 0.9)
        return (math.acos(0.9) / (2 * k), math.acos(-0.9) / (2 * k))
    if identity == "sphere.angular":
        # sin(k phi) inside (-0.9, 0.9)
        return (-math.asin(0.9) / k, math.asin(0.9) / k)
    if identity == "sphere.polar":
        return (math.acos(0.9), math.acos(-0.9))
    return lo, hi


def check_ode(identity: str, params: Dict[str, float], points: Sequence[float],
              tol: float = DEFAULT_TOL) -> CheckResult:
    idn = ODES[identity]
    if len(points) < 16:
        raise ValueError("need at least 16 sample points")
    return _run(identity, lambda x: idn.fn(params, x), points, tol, params, idn.description)


# ---------------------------------------------------------------------------
# ladder compositions: fit each step's multiplier, compare the product with the closed form


def _fit(lhs: Sequence[complex], rhs: Sequence[complex]) -> Tuple[complex, float]:
    """c minimizing |lhs - c rhs|, and the worst relative misfit."""
    num = _csum([l * (r.conjugate() if isinstance(r, complex) else r) for l, r in zip(lhs, rhs)])
    den = math.fsum(abs(r) ** 2 for r in rhs)
    c = num / den
    scale = max(max(abs(l) for l in lhs), 1e-300)
    worst = max(abs(l - c * r) for l, r in zip(lhs, rhs)) / scale
    return c, worst


def _poch(x, n):
    out = 1.0
    for j in range(n):
        out *= x + j
    return out


@dataclass
class ChainResult(CheckResult):
    measured: complex = 0.0
    closed_form: complex = 0.0

    def to_json(self) -> dict:
        d = super().to_json()
        d["measured"] = _cx(self.measured)
        d["closed_form"] = _cx(self.closed_form)
        return d


def _cx(z):
    if isinstance(z, complex) and z.imag != 0:
        return [float(f"{z.real:.15g}"), float(f"{z.imag:.15g}")]
    return float(f"{(z.real if isinstance(z, complex) else z):.15g}")


def _chain(identity, steps, closed, pts, tol, params, detail) -> ChainResult:
    """steps: list of (apply, target) callables of the sample point."""
    total = 1.0
    misfit = 0.0
    for apply, target in steps:
        c, w = _fit([apply(x) for x in pts], [target(x) for x in pts])
        total *= c
        misfit = max(misfit, w)
    err = abs(total - closed) / max(abs(closed), 1e-300)
    return ChainResult(identity, list(pts), max(err, misfit), tol, dict(params), detail,
                       measured=total, closed_form=closed)


def chain_ttw(params, pts_x, pts_R, direction: str, tol=CHAIN_TOL) -> ChainResult:
    """q Jacobi steps and p radial steps; closed forms of the raise/lower multipliers."""
    p, q, n, u, a, b, w = (params[x] for x in ("p", "q", "n", "u", "a", "b", "omega"))
    k = p / q
    A0 = k * (2 * n + a + b + 1)
    m0 = u - k * n
    steps = []
    if direction == "raise":
        for j in range(q):
            nn = n + j
            pr = {"n": nn, "a": a, "b": b}
            steps.append((lambda x, pr=pr: _csum(jacobi_J_plus(pr, x)[:2]),
                          lambda x, nn=nn: ttw_X(nn + 1, a, b, x).v))
        for j in range(p):
            pr = {"A": A0 + 2 * j, "m": m0 - j, "omega": w}
            steps.append((lambda R, pr=pr: _csum(ttw_K_plus(pr, R)[:3]),
                          lambda R, pr=pr: ttw_Y(pr["A"] + 2, pr["m"] - 1, w, R).v))
        closed = 2 ** q * (-1) ** p * w ** p * _poch(n + 1, q) * _poch(n + a + b + 1, q)
    else:
        for j in range(q):
            nn = n - j
            pr = {"n": nn, "a": a, "b": b}
            steps.append((lambda x, pr=pr: _csum(jacobi_J_minus(pr, x)[:2]),
                          lambda x, nn=nn: ttw_X(nn - 1, a, b, x).v))
        for j in range(p):
            pr = {"A": A0 - 2 * j, "m": m0 + j, "omega": w}
            steps.append((lambda R, pr=pr: _csum(ttw_K_minus(pr, R)[:3]),
                          lambda R, pr=pr: ttw_Y(pr["A"] - 2, pr["m"] + 1, w, R).v))
        closed = (2 ** q * w ** p * _poch(-n - a, q) * _poch(-n - b, q)
                  * _poch(u - k * n + 1, p) * _poch(-u - k * (n + a + b + 1), p))
    # each step is sampled on its own variable
    pts = {"x": pts_x, "R": pts_R}
    total = 1.0
    misfit = 0.0
    for i, (apply, target) in enumerate(steps):
        use = pts["x"] if i < q else pts["R"]
        c, wf = _fit([apply(x) for x in use], [target(x) for x in use])
        total *= c
        misfit = max(misfit, wf)
    err = abs(total - closed) / abs(closed)
    return ChainResult(f"ttw.chain.{direction}", list(pts_x) + list(pts_R), max(err, misfit), tol,
                       dict(params), f"composed J/K steps vs closed-form {direction} multiplier",
                       measured=total, closed_form=closed)


def chain_caged(params, pts, direction: str, tol=CHAIN_TOL) -> ChainResult:
    p, q, n, u, a1, a2, mu = (params[x] for x in ("p", "q", "n", "u", "a1", "a2", "mu"))
    k = p / q
    mu1, mu2 = p * mu, q * mu
    m0 = u - k * n
    steps = []
    # x factors then y factors; D+(x) q times with D-(y) p times, or D-(x) with D+(y)
    xs = (caged_D_plus, 1) if direction == "raise" else (caged_D_minus, -1)
    ys = (caged_D_minus, -1) if direction == "raise" else (caged_D_plus, 1)
    for j in range(q):
        nn = n + xs[1] * j
        pr = {"n": nn, "a": a1, "mu": mu1}
        steps.append((lambda x, pr=pr, f=xs[0]: _csum(f(pr, x)[:3]),
                      lambda x, nn=nn: caged_X(nn + xs[1], a1, mu1, x).v))
    for j in range(p):
        mm = m0 + ys[1] * j
        pr = {"n": mm, "a": a2, "mu": mu2}
        steps.append((lambda y, pr=pr, f=ys[0]: _csum(f(pr, y)[:3]),
                      lambda y, mm=mm: caged_X(mm + ys[1], a2, mu2, y).v))
    if direction == "raise":
        closed = (-4 * mu1) ** q * (4 * mu2) ** p * _poch(n + 1, q) * _poch(-u + k * n - a2, p)
    else:
        closed = (4 * mu1) ** q * (-4 * mu2) ** p * _poch(-n - a1, q) * _poch(u - k * n + 1, p)
    return _chain(f"caged.chain.{direction}", steps, closed, pts, tol, params,
                  f"composed D steps vs closed-form {direction} multiplier")


def chain_sphere(params, pts, direction: str, tol=CHAIN_TOL) -> ChainResult:
    p, q, N, n, a = (params[x] for x in ("p", "q", "N", "n", "a"))
    k = p / q
    mu0 = k * (N + 0.5)
    steps = []
    sgn = 1 if direction == "raise" else -1
    for j in range(q):
        nu = N + sgn * j
        pr = {"nu": nu, "mu": a}
        f = legendre_D_plus if direction == "raise" else legendre_D_minus
        steps.append((lambda y, pr=pr, f=f: _csum(f(pr, y)[:2]),
                      lambda y, nu=nu: _sphere_T(nu + sgn, a, y).v))
    for j in range(p):
        mu = mu0 + sgn * j
        pr = {"nu": n, "mu": mu}
        f = legendre_C_plus if direction == "raise" else legendre_C_minus
        steps.append((lambda x, pr=pr, f=f: _csum(f(pr, x)[:2]),
                      lambda x, mu=mu: _sphere_T(n, mu + sgn, x).v))
    sg = (-1) ** (p + q)
    if direction == "raise":
        closed = sg * _poch(N - a + 1, q)
    else:
        closed = sg * _poch(-N - a, q) * _poch(-n - mu0, p) * _poch(n - mu0 + 1, p)
    return _chain(f"sphere.chain.{direction}", steps, closed, pts, tol, params,
                  f"composed C/D steps vs closed-form {direction} multiplier")


def chain_ce(params, pts_r, pts_phi, direction: str, tol=CHAIN_TOL) -> ChainResult:
    p, q, Om, beta, delta = (params[x] for x in ("p", "q", "Omega", "beta", "delta"))
    sgn = 1 if direction == "raise" else -1
    total = 1.0
    misfit = 0.0
    for j in range(p):
        nu = Om + sgn * j
        pr = {"nu": nu, "beta": beta}
        f = bessel_r_up if sgn > 0 else bessel_r_down
        c, w = _fit([_csum(f(pr, r)[:2]) for r in pts_r],
                    [bessel_j(nu + sgn, Jet.var(r) * beta).v for r in pts_r])
        total *= c
        misfit = max(misfit, w)
    for j in range(q):
        nu = Om * q / p + sgn * j
        pr = {"nu": nu, "delta": delta}
        f = bessel_w_up if sgn > 0 else bessel_w_down
        c, w = _fit([_csum(f(pr, t)[:2]) for t in pts_phi],
                    [bessel_j(nu + sgn, Jet.var(_w_point(pr, t))).v for t in pts_phi])
        total *= c
        misfit = max(misfit, w)
    closed = beta ** p
    err = abs(total - closed) / abs(closed)
    return ChainResult(f"ce.chain.{direction}", list(pts_r) + list(pts_phi), max(err, misfit), tol,
                       dict(params), f"composed Bessel shifts vs beta^p", measured=total, closed_form=closed)


# ---------------------------------------------------------------------------
# Wronskian determinant


def wronskian_product(f1: Jet, f2: Jet, g1: Jet, g2: Jet) -> Tuple[float, float]:
    """(4x4 determinant W, factorized (Wx)^2 (Wy)^2) from values and first derivatives."""
    rows = []
    for f in (f1, f2):
        for g in (g1, g2):
            rows.append([f.d * g.d, f.d * g.v, f.v * g.d, f.v * g.v])
    det = np.linalg.det(np.array(rows, dtype=complex if any(
        isinstance(v, complex) for r in rows for v in r) else float))
    wx = f1.v * f2.d - f2.v * f1.d
    wy = g1.v * g2.d - g2.v * g1.d
    return det, (wx * wx) * (wy * wy)


def second_solution_legendre(nu: float, mu: float, x0: float, xs: Sequence[float]) -> List[Jet]:
    """A solution of the Legendre equation independent of P, by integration from x0.

    Initial data (0, 1) at x0 are chosen with P(x0) != 0, so the pair is independent.
    """

    def rhs(x, y):
        return [y[1], (2 * x * y[1] - (nu * (nu + 1) - mu * mu / (1 - x * x)) * y[0]) / (1 - x * x)]

    out = []
    for x in xs:
        if x == x0:
            out.append(Jet(0.0, 1.0))
            continue
        sol = solve_ivp(rhs, (x0, x), [0.0, 1.0], method="DOP853", rtol=1e-13, atol=1e-15)
        y, yp = sol.y[0, -1], sol.y[1, -1]
        out.append(Jet(y, yp, 0.0))
    return out


def wronskian_check(params, pts, tol=DEFAULT_TOL) -> Tuple[CheckResult, CheckResult]:
    """Factorization of W and Abel's law (1-x^2) W_x = const for the Legendre pair."""
    nu, mu, nu2, mu2, y0 = (params[x] for x in ("nu", "mu", "nu2", "mu2", "y"))
    x0 = 0.0
    xs = list(pts)
    seconds = second_solution_legendre(nu, mu, x0, xs)
    g1 = ferrers_p(nu2, mu2, Jet.var(y0))
    g2 = second_solution_legendre(nu2, mu2, x0, [y0])[0]
    fac_res = []
    abel = []
    for x, f2 in zip(xs, seconds):
        f1 = ferrers_p(nu, mu, Jet.var(x))
        det, fac = wronskian_product(f1, f2, g1, g2)
        fac_res.append(abs(det - fac) / max(abs(det), abs(fac)))
        abel.append((1 - x * x) * (f1.v * f2.d - f2.v * f1.d))
    ref = abel[0]
    spread = max(abs(v - ref) for v in abel) / abs(ref)
    r1 = CheckResult("wronskian.factorization", xs, max(fac_res), tol, dict(params),
                     "4x4 determinant equals (Wx)^2 (Wy)^2; second solutions from ODE integration")
    r2 = CheckResult("wronskian.abel", xs, spread, 1e-9, dict(params),
                     "(1-x^2) W[P, y2] is constant and nonzero (integrated second solution)")
    r2.detail += f"; value {ref:.6g}"
    return r1, r2


def derivative_check(spec: FnSpec, pts, h=1e-5, tol=1e-6) -> CheckResult:
    worst = 0.0
    for x in pts:
        j = eval_fn(spec, x)
        fd = (eval_fn(spec, x + h).v - eval_fn(spec, x - h).v) / (2 * h)
        worst = max(worst, abs(fd - j.d) / max(abs(j.d), abs(j.v), 1e-300))
    return CheckResult(f"derivative.{spec.family}", list(pts), worst, tol, dict(spec.params),
                       "series derivative vs central difference")


# ---------------------------------------------------------------------------
# suite


def _g(rng: random.Random, lo: float, hi: float) -> float:
    return round(lo + (hi - lo) * rng.random(), 6)


CHAIN_PQ = ((1, 1), (1, 2), (2, 1), (3, 1), (3, 2))


def run_suite(tol: float = DEFAULT_TOL, n_points: int = 16, seed: int = 12345,
              chain_tol: float = CHAIN_TOL, pq: Sequence[Tuple[int, int]] = CHAIN_PQ) -> List[CheckResult]:
    rng = random.Random(seed)
    out: List[CheckResult] = []

    def pts(lo, hi, tag):
        return sample_points(lo, hi, n_points, f"{seed}:{tag}")

    # Legendre
    leg = {"nu": _g(rng, 0.3, 2.7), "mu": _g(rng, 0.2, 1.8)}
    for name in ("legendre.D+", "legendre.D-", "legendre.C+", "legendre.C-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, leg, pts(lo, hi, name), tol))
    lag = {"n": _g(rng, 0.3, 2.7), "alpha": _g(rng, 0.2, 1.8)}
    for name in ("laguerre.zD-", "laguerre.zD+"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, lag, pts(lo, hi, name), tol))
    cg = {"n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8), "mu": _g(rng, 0.4, 1.5)}
    for name in ("caged.D+", "caged.D-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, cg, pts(lo, hi, name), tol))
    jac = {"n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8), "b": _g(rng, 0.2, 1.8)}
    for name in ("jacobi.J+", "jacobi.J-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, jac, pts(lo, hi, name), tol))
    rad = {"A": _g(rng, 0.5, 2.5), "m": _g(rng, 0.3, 2.7), "omega": _g(rng, 0.5, 1.5)}
    for name in ("radial.K+", "radial.K-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, rad, pts(lo, hi, name), tol))
    bes = {"nu": _g(rng, 0.3, 2.7), "beta": _g(rng, 0.5, 1.5)}
    for name in ("bessel.r+", "bessel.r-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, bes, pts(lo, hi, name), tol))
    besw = {"nu": _g(rng, 0.3, 2.7), "delta": _g(rng, 0.5, 2.0)}
    for name in ("bessel.w+", "bessel.w-"):
        lo, hi = RECURRENCES[name].domain
        out.append(check_recurrence(name, besw, pts(lo, hi, name), tol))

    # ODEs
    for p, q in pq:
        k = p / q
        sph = {"k": k, "N": _g(rng, 0.2, 2.2), "n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8)}
        ce = {"k": k, "Omega": _g(rng, 0.3, 2.7), "delta": _g(rng, 0.5, 2.0), "beta": _g(rng, 0.5, 1.5)}
        tt = {"k": k, "n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8), "b": _g(rng, 0.2, 1.8)}
        for name, pr in (("sphere.polar", sph), ("sphere.angular", sph), ("ce.angular", ce),
                         ("ttw.angular", tt)):
            lo, hi = _ode_domain(name, pr)
            r = check_ode(name, pr, pts(lo, hi, f"{name}{p}{q}"), tol)
            r.identity = f"{name}[{p},{q}]"
            out.append(r)
    for name, pr in (("ce.radial", {"Omega": _g(rng, 0.3, 2.7), "beta": _g(rng, 0.5, 1.5)}),
                     ("caged.x", {"n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8), "mu": _g(rng, 0.4, 1.5)}),
                     ("ttw.radial", {"A": _g(rng, 0.5, 2.5), "m": _g(rng, 0.3, 2.7), "omega": _g(rng, 0.5, 1.5)})):
        lo, hi = _ode_domain(name, pr)
        out.append(check_ode(name, pr, pts(lo, hi, name), tol))

    # ladder compositions
    for p, q in pq:
        tw = {"p": p, "q": q, "n": _g(rng, 0.3, 1.7), "u": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8),
              "b": _g(rng, 0.2, 1.8), "omega": _g(rng, 0.5, 1.5)}
        # keep m = u - k n away from poles of Gamma and the radial order positive on lowering
        tw["u"] = round(p / q * tw["n"] + _g(rng, 0.3, 1.7), 6)
        for d in ("raise", "lower"):
            r = chain_ttw(tw, pts(-0.9, 0.9, f"tx{p}{q}{d}"), pts(0.3, 2.5, f"tR{p}{q}{d}"), d, chain_tol)
            r.identity += f"[{p},{q}]"
            out.append(r)
        cgp = {"p": p, "q": q, "n": _g(rng, 0.3, 1.7), "a1": _g(rng, 0.2, 1.8), "a2": _g(rng, 0.2, 1.8),
               "mu": _g(rng, 0.4, 1.2)}
        cgp["u"] = round(p / q * cgp["n"] + _g(rng, 0.3, 1.7), 6)
        for d in ("raise", "lower"):
            r = chain_caged(cgp, pts(0.3, 1.8, f"c{p}{q}{d}"), d, chain_tol)
            r.identity += f"[{p},{q}]"
            out.append(r)
        sp = {"p": p, "q": q, "N": _g(rng, 0.2, 2.2), "n": _g(rng, 0.3, 2.7), "a": _g(rng, 0.2, 1.8)}
        for d in ("raise", "lower"):
            r = chain_sphere(sp, pts(-0.9, 0.9, f"s{p}{q}{d}"), d, chain_tol)
            r.identity += f"[{p},{q}]"
            out.append(r)
        cep = {"p": p, "q": q, "Omega": _g(rng, 0.3, 2.7), "beta": _g(rng, 0.5, 1.5), "delta": _g(rng, 0.5, 2.0)}
        for d in ("raise", "lower"):
            r = chain_ce(cep, pts(0.3, 4.0, f"er{p}{q}{d}"), pts(-1.2, 1.2, f"ew{p}{q}{d}"), d, chain_tol)
            r.identity += f"[{p},{q}]"
            out.append(r)

    # Wronskian
    wp = {"nu": _g(rng, 0.3, 2.7), "mu": _g(rng, 0.2, 1.8), "nu2": _g(rng, 0.3, 2.7),
          "mu2": _g(rng, 0.2, 1.8), "y": _g(rng, -0.6, 0.6)}
    out.extend(wronskian_check(wp, pts(-0.8, 0.8, "wr"), tol))
    return out


__all__ = [
    "Jet", "FnSpec", "eval_fn", "CheckResult", "ChainResult", "check_recurrence", "check_ode",
    "chain_ttw", "chain_caged", "chain_sphere", "chain_ce", "wronskian_product", "wronskian_check",
    "derivative_check", "run_suite", "RECURRENCES", "ODES", "DomainError", "SeriesError",
    "hyp_series", "ferrers_p", "jacobi_p", "laguerre_l", "bessel_j",
]
