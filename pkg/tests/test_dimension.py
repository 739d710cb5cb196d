import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ifsline import (
    Ifs,
    IfsMap,
    affine_ifs,
    assouad_estimate,
    bowen_dimension,
    bump,
    covering_count,
    pressure,
    similarity_dimension,
    synthesize_verdict,
)
from ifsline.errors import InconsistentInputError, ValidationError
from ifsline.separation import ssp_check, wsp_verdict


def test_similarity_brackets():
    est = similarity_dimension([F(1, 2), F(1, 3), F(1, 3)])
    assert est.certified
    assert est.lower <= est.value <= est.upper
    assert abs(est.value - 1.1672889532864674) < 1e-12
    assert abs(similarity_dimension(["-1/3", "1/4", "1/4"]).value - 0.8567375604994066) < 1e-12
    with pytest.raises(ValidationError):
        similarity_dimension([F(1, 2)])
    with pytest.raises(ValidationError):
        similarity_dimension([F(1, 2), F(1)])


@given(st.lists(st.fractions(F(1, 20), F(19, 20)), min_size=2, max_size=5))
def test_similarity_root_solves_moran_equation(rs):
    est = similarity_dimension(rs)
    total = sum(float(r) ** est.value for r in rs)
    assert abs(total - 1) < 1e-9


def test_pressure_affine_exact():
    ifs = affine_ifs([("1/2", 0), ("1/4", "1/2"), ("1/4", "3/4")])
    assert pressure(ifs, 0) == (math.log(3), math.log(3))
    lo, hi = pressure(ifs, 1)
    assert lo == hi and abs(lo) < 1e-15
    assert pressure(ifs, 2)[0] < 0
    with pytest.raises(ValueError):
        pressure(ifs, -1)


def test_bowen_on_perturbed_interval_system():
    # images still tile [0, 1], so the zero of the pressure is 1
    g = Ifs([IfsMap(F(1, 2), 0, (bump(F(1, 4), F(1, 2), F(1, 5)),)), IfsMap(F(1, 2), F(1, 2))], ambient=(0, 1), rho="3/4", beta="1/4")
    est = bowen_dimension(g, n=8)
    assert est.lower <= 1 <= est.upper
    assert est.upper - est.lower < 0.2
    lo, hi = pressure(g, 1, n=8)
    assert lo <= 0 <= hi


def test_bowen_equals_similarity_for_affine():
    ifs = affine_ifs([("1/2", 0), ("-1/3", "1/3"), ("1/5", "4/5")])
    assert abs(bowen_dimension(ifs).value - similarity_dimension(ifs.ratios()).value) < 1e-12


def test_covering_counts_and_assouad():
    cantor = affine_ifs([("1/3", 0), ("1/3", "2/3")])
    assert covering_count(cantor, F(1, 2), 1, F(1, 9)) >= 4
    est = assouad_estimate(cantor)
    assert abs(est.value - math.log(2) / math.log(3)) < 0.05
    interval = affine_ifs([("1/2", 0), ("1/2", "1/2")])
    assert abs(assouad_estimate(interval).value - 1) < 0.02


def test_verdicts():
    cantor = affine_ifs([("1/3", 0), ("1/3", "2/3")])
    s0 = similarity_dimension(cantor.ratios())
    rep = synthesize_verdict(s0, wsp_verdict(cantor, 4))
    assert rep.status == "DEFINITIVE"
    assert rep.dim_A == s0.value and rep.hausdorff_measure == "positive finite"
    fails = synthesize_verdict(s0, "WITNESSED_FAILS")
    assert fails.dim_A == 1 and fails.hausdorff_measure == "zero"
    open_ = synthesize_verdict(s0, "NO_FAILURE_FOUND")
    assert open_.status == "INCONCLUSIVE"
    assert open_.branches["if_wsp_fails"]["dim_A"] == 1
    assert synthesize_verdict(s0, "NO_FAILURE_FOUND", singleton=True).status == "REFUSED"
    with pytest.raises(ValueError):
        synthesize_verdict(s0, "MAYBE")


def test_inconsistent_ssp_and_overlap():
    cantor = affine_ifs([("1/3", 0), ("1/3", "2/3")])
    v = wsp_verdict(cantor, 3)
    assert ssp_check(cantor).holds
    with pytest.raises(InconsistentInputError):
        synthesize_verdict(similarity_dimension(cantor.ratios()), v, exact_overlaps=[((1, 1), (2,))])
