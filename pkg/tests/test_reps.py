import random
from fractions import Fraction as F

import flint
import pytest

from superint.reps import DegenerateParameters, build_rep, check_rep, random_params, sweep
from superint.structure import verify_structure
from superint.systems import build_model


def _setup(system, p, q):
    m = build_model(system, p, q)
    return m, verify_structure(m, with_L5=False)


def test_caged_example_matrices():
    m, rep_report = _setup("caged", 1, 1)
    rep = build_rep(m, {"a1": F(1, 3), "a2": F(2, 7), "mu": F(3, 2)}, 0, 0, 3, rep_report)
    assert rep.dimension == 4
    L1, L3, L4 = rep.matrices["L1"], rep.matrices["L3"], rep.matrices["L4"]
    mu = flint.fmpq(3, 2)
    assert L1 * L3 - L3 * L1 == L4 * (-4 * mu)
    assert L1 * L4 - L4 * L1 == L3 * (-4 * mu)
    assert check_rep(rep, rep_report).ok


def test_ttw_casimir_as_matrices():
    m, report = _setup("ttw", 1, 2)
    rep = build_rep(m, {"a": F(1, 3), "b": F(1, 5), "omega": F(1)}, 0, 0, 2, report)
    chk = check_rep(rep, report)
    assert chk.equations["Casimir"]
    assert chk.ok
    assert rep.spectrum_matches()


def test_one_dimensional_rep():
    m, report = _setup("caged", 2, 1)
    rep = build_rep(m, {"a1": F(1, 3), "a2": F(2, 7), "mu": F(1)}, 1, 0, 0, report)
    assert rep.dimension == 1
    assert check_rep(rep, report).ok


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 1), (3, 2)])
def test_caged_spectra_closed_forms(p, q):
    for chk in sweep("caged", p, q, n_sets=5, M=2, seed=1):
        assert chk.ok
        assert chk.rep.energy_matches()
        assert chk.rep.spectrum_matches()


@pytest.mark.parametrize("p,q", [(1, 1), (1, 2), (2, 1), (3, 2)])
def test_ttw_reps(p, q):
    for chk in sweep("ttw", p, q, n_sets=5, M=2, seed=1):
        rep = chk.rep
        assert chk.ok
        assert rep.spectrum_matches()
        # energy read off the model's own boundary data
        k = F(p, q)
        a, b, w = rep.params["a"], rep.params["b"], rep.params["omega"]
        p0, q0 = rep.offsets["p0"], rep.offsets["q0"]
        derived = 2 * w * (2 * p * rep.M + 2 * p0 + 2 * k * q0 + k * (a + b + 1) + 1)
        assert rep.energy == derived
        # the closed form with a+b+2 agrees only when k = 1
        assert rep.energy_matches() is (k == 1)


def test_boundary_annihilation():
    m, report = _setup("caged", 3, 2)
    rep = build_rep(m, {"a1": F(5, 3), "a2": F(-2, 7), "mu": F(1, 2)}, 1, 1, 3, report)
    assert all(rep.boundary.values()), rep.boundary


def test_degenerate_parameters_rejected():
    m, report = _setup("ttw", 1, 1)
    with pytest.raises(DegenerateParameters):
        # a+b+1 = 0 folds the grid onto its mirror image
        build_rep(m, {"a": F(-1, 2), "b": F(-1, 2), "omega": F(1)}, 0, 0, 2, report)


def test_random_params_are_nonintegral():
    rng = random.Random(3)
    for _ in range(50):
        for v in random_params("caged", rng).values():
            assert v.denominator != 1
