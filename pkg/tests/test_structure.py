import pytest

from superint.exactalg import is_even_in
from superint.structure import parity_case, stackel_map, verify

PQ = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)]


@pytest.fixture(scope="module")
def reports():
    cache = {}

    def get(system, p, q, with_L5=False):
        key = (system, p, q, with_L5)
        if key not in cache:
            cache[key] = verify(system, p, q, with_L5=with_L5)
        return cache[key]

    return get


@pytest.mark.parametrize("system", ["complex_euclidean", "caged", "ttw"])
@pytest.mark.parametrize("p,q", PQ)
def test_all_displayed_relations_close(reports, system, p, q):
    r = reports(system, p, q)
    assert r.structure_ok, r.failed()


@pytest.mark.parametrize("p,q", PQ)
def test_sphere_relations(reports, p, q):
    """Every sphere relation closes except two displayed forms, whose corrected forms close."""
    r = reports("sphere", p, q)
    bad = {e.name for e in r.counted() if not e.ok}
    assert bad == {"{L4,L4,L2}", "Casimir"}
    assert r.equation("{L4,L4,L2} (engine form)").ok
    assert r.equation("Casimir (engine form)").ok
    assert r.equation("[L2,L3] (product form)").ok and r.equation("[L2,L3] (symmetrized form)").ok


@pytest.mark.parametrize("system,p,q,name", [
    ("sphere", 1, 1, "Example (1,1)"),
    ("sphere", 1, 2, "Example (1,2)"),
    ("complex_euclidean", 1, 1, "Example (1,1)"),
    ("complex_euclidean", 2, 1, "Example (2,1)"),
    ("caged", 1, 1, "Example (1,1) [L1,L3]"),
    ("caged", 1, 1, "Example (1,1) [L1,L4]"),
    ("ttw", 1, 1, "Example (1,1)"),
])
def test_worked_examples(reports, system, p, q, name):
    assert reports(system, p, q).equation(name).ok


@pytest.mark.parametrize("p,q", PQ)
def test_ttw_P_even_in_energy(reports, p, q):
    r = reports("ttw", p, q)
    for form in r.P.values():
        assert is_even_in(form.poly, "E")


def test_ce_casimir_convention_reported(reports):
    even = reports("complex_euclidean", 1, 1).casimir
    odd = reports("complex_euclidean", 1, 2).casimir
    assert even["status"] == "verified" and odd["status"] == "verified"
    assert even["convention"] != odd["convention"]


def test_caged_flags_printed_forms(reports):
    r = reports("caged", 1, 2)
    assert not r.equation("[L2,Phi+] as printed").ok
    assert r.equation("[L1,Phi+]").ok and r.equation("[L1,Phi-]").ok
    assert any("(-u-kt+1)_p" in n for n in r.notes)


def test_parity_cases():
    assert parity_case(2, 1) != parity_case(1, 1) != parity_case(1, 2)
    assert parity_case(3, 1) == parity_case(1, 1)


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 1), (3, 1), (1, 3), (3, 2), (2, 3)])
def test_L5_residue_route_and_commutator(reports, p, q):
    L5 = reports("ttw", p, q, True).L5
    assert L5.checks["Q residue route = pairing route"]
    assert L5.checks["[L2,L5] = L4"]
    assert L5.checks["residue at pole is zero"]
    assert L5.checks["L5 polynomial on even polynomials"]


@pytest.mark.parametrize("p,q,agrees", [
    (1, 1, True), (3, 2, True), (1, 3, True),
    (2, 1, False), (1, 2, False), (3, 1, False), (2, 3, False),
])
def test_L5_closed_form_sign_pattern(reports, p, q, agrees):
    """The closed-form Q agrees with the residue route exactly when (-1)^(p//2 + [q even]) = 1."""
    L5 = reports("ttw", p, q, True).L5
    assert L5.checks["Q equals closed form"] is agrees
    assert (L5.Q_closed == L5.Q) is agrees
    if not agrees:
        assert L5.Q_closed == -L5.Q
    assert agrees == ((p // 2 + (q % 2 == 0)) % 2 == 0)


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 2), (3, 2)])
def test_stackel(reports, p, q):
    res = stackel_map(reports("ttw", p, q))
    assert res.ok
    assert all(res.P_match.values()) and res.involutive and res.energy_check


def test_report_json_is_deterministic(reports):
    import json

    a = json.dumps(verify("ttw", 1, 2).to_json(), sort_keys=True)
    b = json.dumps(verify("ttw", 1, 2).to_json(), sort_keys=True)
    assert a == b
