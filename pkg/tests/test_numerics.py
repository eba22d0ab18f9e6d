import cmath
import math

import mpmath
import pytest

from superint import numerics as nm
from superint.numerics import FnSpec, Jet, eval_fn

mpmath.mp.dps = 30
XS = nm.sample_points(-0.9, 0.9, 16, "oracle")


def rel(a, b):
    return abs(complex(a) - complex(b)) / max(abs(complex(b)), 1e-300)


# -- trivial examples -------------------------------------------------------


def test_simple_cases():
    j = eval_fn(FnSpec("JacobiP", (("n", 0.0), ("alpha", 0.3), ("beta", 0.7))), 0.2)
    assert j.v == pytest.approx(1.0) and j.d == pytest.approx(0.0, abs=1e-15)
    al, z = 0.4, 1.3
    lag = eval_fn(FnSpec("LaguerreL", (("n", 1.0), ("alpha", al)), (0.0, 10.0)), z)
    assert lag.v == pytest.approx(1 + al - z, rel=1e-14)
    leg = eval_fn(FnSpec("LegendreP", (("nu", 2.0), ("mu", 0.0))), 0.3)
    assert leg.v == pytest.approx((3 * 0.09 - 1) / 2, rel=1e-14)


def test_domain_violation():
    with pytest.raises(nm.DomainError):
        eval_fn(FnSpec("LegendreP", (("nu", 1.5), ("mu", 0.5))), 0.99)
    with pytest.raises(nm.DomainError):
        nm.bessel_j(0.5, Jet.var(0.01))


# -- oracles ----------------------------------------------------------------


@pytest.mark.parametrize("nu,mu", [(1.37, 0.42), (2.6, 1.3), (0.55, -0.7)])
def test_ferrers_vs_mpmath(nu, mu):
    for x in XS:
        assert rel(nm.ferrers_p(nu, mu, Jet.var(x)).v, mpmath.legenp(nu, mu, x, type=2)) < 1e-12


@pytest.mark.parametrize("n,a,b", [(1.7, 0.3, 0.9), (2.25, 1.4, 0.2), (0.6, 0.5, 1.5)])
def test_jacobi_vs_mpmath(n, a, b):
    for x in XS:
        assert rel(nm.jacobi_p(n, a, b, Jet.var(x)).v, mpmath.jacobi(n, a, b, x)) < 1e-12


@pytest.mark.parametrize("n,a", [(1.7, 0.3), (2.4, 1.1), (0.35, 2.5)])
def test_laguerre_vs_mpmath(n, a):
    for z in nm.sample_points(0.1, 4.0, 16, "lag"):
        assert rel(nm.laguerre_l(n, a, Jet.var(z)).v, mpmath.laguerre(n, a, z)) < 1e-12


@pytest.mark.parametrize("nu", [0.4, 1.75, 2.5])
def test_bessel_vs_mpmath_complex(nu):
    for phi in nm.sample_points(-1.2, 1.2, 16, "bes"):
        w = 1.7 * cmath.exp(1j * phi)
        assert rel(nm.bessel_j(nu, Jet.var(w)).v, mpmath.besselj(nu, w)) < 1e-12
    for r in nm.sample_points(0.2, 5.0, 16, "besr"):
        assert rel(nm.bessel_j(nu, Jet.var(r)).v, mpmath.besselj(nu, r)) < 1e-12


def test_confluent_series_vs_mpmath():
    spec = FnSpec("ConfluentSeries", (("a", -1.3), ("b", 2.2)), (0.0, 5.0))
    for z in nm.sample_points(0.1, 4.0, 16, "conf"):
        j = eval_fn(spec, z)
        assert rel(j.v, mpmath.hyp1f1(-1.3, 2.2, z)) < 1e-12
        assert rel(j.d, mpmath.diff(lambda t: mpmath.hyp1f1(-1.3, 2.2, t), z)) < 1e-11


@pytest.mark.parametrize("spec,lo,hi", [
    (FnSpec("LegendreP", (("nu", 1.37), ("mu", 0.42))), -0.9, 0.9),
    (FnSpec("JacobiP", (("n", 1.7), ("alpha", 0.3), ("beta", 0.9))), -0.9, 0.9),
    (FnSpec("LaguerreL", (("n", 2.4), ("alpha", 1.1)), (0.0, 10.0)), 0.2, 4.0),
    (FnSpec("BesselJ", (("nu", 1.75),)), 0.3, 5.0),
])
def test_derivative_vs_finite_difference(spec, lo, hi):
    res = nm.derivative_check(spec, nm.sample_points(lo, hi, 16, spec.family))
    assert res.passed, res.max_residual


def test_second_derivative_vs_mpmath():
    for x in XS[:5]:
        j = nm.ferrers_p(1.37, 0.42, Jet.var(x))
        dd = mpmath.diff(lambda t: mpmath.legenp(1.37, 0.42, t, type=2), x, 2)
        assert rel(j.dd, dd) < 1e-10


# -- recurrences and ODEs ---------------------------------------------------


@pytest.mark.parametrize("name", sorted(nm.RECURRENCES))
def test_each_recurrence(name):
    idn = nm.RECURRENCES[name]
    params = {"nu": 1.37, "mu": 0.42, "n": 1.63, "alpha": 0.71, "a": 0.38, "b": 1.27,
              "A": 1.45, "m": 1.21, "omega": 0.83, "beta": 1.11, "delta": 1.3}
    res = nm.check_recurrence(name, params, nm.sample_points(*idn.domain, 20, name))
    assert res.passed, (name, res.max_residual)


def test_standard_jacobi_orientation_flips_sign():
    # the J+ identity as written holds for P^(b,a)_n(-x), not for P^(a,b)_n(x)
    pr = {"n": 1.63, "a": 0.38, "b": 1.27}
    worst = max(nm._rel(nm.jacobi_J_plus_standard(pr, x)) for x in XS)
    assert worst > 1e-3


def test_ce_angular_k3():
    pr = {"k": 3.0, "Omega": 1.4, "delta": 0.9}
    res = nm.check_ode("ce.angular", pr, nm.sample_points(-1.0, 1.0, 16, "k3"))
    assert res.passed


def test_too_few_points():
    with pytest.raises(ValueError):
        nm.check_recurrence("legendre.D+", {"nu": 1.0, "mu": 0.5}, [0.1, 0.2])


# -- Wronskian --------------------------------------------------------------


def test_wronskian_dependent_pair_vanishes():
    f1 = nm.ferrers_p(1.37, 0.42, Jet.var(0.3))
    f2 = f1 * 2.5
    g1 = nm.ferrers_p(0.8, 0.3, Jet.var(-0.2))
    g2 = nm.second_solution_legendre(0.8, 0.3, 0.0, [-0.2])[0]
    det, fac = nm.wronskian_product(f1, f2, g1, g2)
    assert abs(det) < 1e-12 and abs(fac) < 1e-12


def test_wronskian_legendre_pair_nonzero_at_03():
    nu, mu = 1.37, 0.42
    f1 = nm.ferrers_p(nu, mu, Jet.var(0.3))
    f2 = nm.second_solution_legendre(nu, mu, 0.0, [0.3])[0]
    g1 = nm.ferrers_p(0.8, 0.3, Jet.var(-0.2))
    g2 = nm.second_solution_legendre(0.8, 0.3, 0.0, [-0.2])[0]
    det, fac = nm.wronskian_product(f1, f2, g1, g2)
    assert abs(det) > 1e-3
    assert abs(det - fac) / abs(det) < 1e-10


# -- suite ------------------------------------------------------------------


def test_suite_passes_and_is_reproducible():
    a = nm.run_suite(seed=7)
    b = nm.run_suite(seed=7)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    bad = [(r.identity, r.max_residual) for r in a if not r.passed]
    assert not bad
    assert all(len(r.points) >= 16 for r in a)
