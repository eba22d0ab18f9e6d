import pytest

from superint.exactalg import Ring
from superint.shiftops import reflect
from superint.systems import (
    SYSTEM_IDS,
    UnsupportedSystem,
    build_ladders,
    build_model,
    canonical_id,
    l4_divisor,
    symmetrize,
)

PQ = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)]


@pytest.mark.parametrize("system", SYSTEM_IDS)
@pytest.mark.parametrize("p,q", PQ)
def test_ladders_match_closed_forms(system, p, q):
    m = build_model(system, p, q)
    lp = build_ladders(m)
    assert lp.checks["raise_closed_form"] and lp.checks["lower_closed_form"]
    assert all(lp.checks.values()), lp.checks
    step = p if system == "complex_euclidean" else q
    assert lp.raise_.shifts() == [step]
    assert lp.lower.shifts() == [-step]


@pytest.mark.parametrize("system", ["ttw", "kepler", "complex_euclidean"])
@pytest.mark.parametrize("p,q", PQ)
def test_reflection_swaps_ladders(system, p, q):
    m = build_model(system, p, q)
    lp = build_ladders(m)
    assert reflect(lp.raise_, m.center) == lp.lower


@pytest.mark.parametrize("p,q", PQ)
def test_sphere_reflection_on_products(p, q):
    # the sphere multipliers are not reflection-symmetric one by one; the products are
    lp = build_ladders(build_model("sphere", p, q))
    assert lp.checks["F1(-N-1)=F2(N)"] and lp.checks["F_j(-n-1)=F_j(n)"]


@pytest.mark.parametrize("p,q", PQ)
def test_symmetrized_generators_are_reflection_even(p, q):
    for system in ("ttw", "complex_euclidean"):
        m = build_model(system, p, q)
        L3, L4 = symmetrize(m, build_ladders(m))
        c = m.center
        if system == "complex_euclidean" and (p + q) % 2:
            assert reflect(L3, c) == -L3
            assert reflect(L4, c) == -L4
        else:
            assert reflect(L3, c) == L3
            assert reflect(L4, c) == L4


def test_separation_maps():
    m = build_model("caged", 1, 1)
    t, mu, a1 = (m.var(x) for x in ("t", "mu", "a1"))
    assert m.separation_value() == -2 * mu * (2 * t + a1 + 1)  # mu1 = p mu
    m = build_model("complex_euclidean", 2, 1)
    assert m.separation_value() == m.var("Omega") ** 2


def test_ttw_energy_relation():
    m = build_model("ttw", 1, 2)
    u, a, b, w = (m.var(x) for x in ("u", "a", "b", "omega"))
    k = m.k
    assert m.energy_value() == -2 * w * (2 * u + 1 + (a + b + 1) * k)


def test_sphere_raise_action_example():
    m = build_model("sphere", 1, 1)
    lp = build_ladders(m)
    N, a = m.var("N"), m.var("a")
    assert lp.raise_action == (N - a + 1)  # (-1)^{p+q} (N-a+1)_q with p=q=1


def test_ttw_divisor_and_ladder_step():
    m = build_model("ttw", 3, 2)
    assert m.step == 2
    assert l4_divisor(m) is not None
    assert l4_divisor(build_model("caged", 1, 1)) is None


def test_bad_input():
    with pytest.raises(ValueError):
        build_model("ttw", 2, 4)
    with pytest.raises((UnsupportedSystem, ValueError, KeyError)):
        build_model("nonesuch", 1, 1)
    assert canonical_id("TTW") == "ttw"
