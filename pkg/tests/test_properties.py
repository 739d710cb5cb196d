"""Cross-module invariants on randomly drawn affine systems."""

import json
import math
from fractions import Fraction as F

from hypothesis import assume, given
from hypothesis import strategies as st

from ifsline import Ifs, InfiniteWordSpec, bump, convex_combination, project, similarity_dimension
from ifsline.dimension import pressure
from ifsline.io import dumps
from ifsline.maps import attractor_is_singleton, compose
from ifsline.separation import ssp_check, wsp_criterion_search
from properties import affine_systems, ratios

words = st.tuples(st.lists(st.integers(1, 3), max_size=3), st.lists(st.integers(1, 3), min_size=1, max_size=3))


def _clip(ifs, w):
    return InfiniteWordSpec(tuple(min(s, ifs.m) for s in w[0]), tuple(min(s, ifs.m) for s in w[1]))


@given(affine_systems())
def test_system_dict_round_trip(ifs):
    again = Ifs.from_dict(json.loads(dumps(ifs.to_dict())))
    assert again.to_dict() == ifs.to_dict()


@given(affine_systems(), words)
def test_projection_lies_in_hull(ifs, w):
    x = project(ifs, _clip(ifs, w)).value
    assert ifs.hull.lo <= x <= ifs.hull.hi


@given(affine_systems(), words)
def test_periodic_point_is_fixed_by_its_period(ifs, w):
    word = InfiniteWordSpec((), _clip(ifs, w).period)
    x = project(ifs, word).value
    assert compose(ifs, word.period)(x) == x


@given(affine_systems(), st.fractions(F(0), F(3), max_denominator=8), st.fractions(F(1, 8), F(2), max_denominator=8))
def test_pressure_strictly_decreases(ifs, s, ds):
    lo1, hi1 = pressure(ifs, float(s))
    lo2, hi2 = pressure(ifs, float(s + ds))
    assert hi2 < lo1 or math.isclose(hi2, lo1, abs_tol=1e-12)


@given(st.lists(ratios(8), min_size=2, max_size=4), st.integers(0, 3))
def test_similarity_dimension_monotone_in_ratios(rs, k):
    k = k % len(rs)
    rs = [abs(r) for r in rs]
    assume(rs[k] < F(9, 10))
    grown = list(rs)
    grown[k] = (rs[k] + 1) / 2
    assume(grown[k] < 1)
    assert similarity_dimension(grown).value >= similarity_dimension(rs).value


@given(affine_systems(m_max=2, max_den=5))
def test_ssp_gives_positive_criterion(ifs):
    assume(not attractor_is_singleton(ifs))
    if ssp_check(ifs).holds:
        crit = wsp_criterion_search(ifs, 3)
        assert min(crit.values) > 0


@given(affine_systems(m_max=2, max_den=4), affine_systems(m_max=2, max_den=4), st.fractions(F(0), F(1), max_denominator=6))
def test_convex_combination_is_pointwise(g, gt, alpha):
    assume(g.m == gt.m)
    try:
        mid = convex_combination(g, gt, alpha, validate=False)
    except ValueError:
        assume(False)
    for a, b, c in zip(g.maps, gt.maps, mid.maps):
        assert c.r == alpha * a.r + (1 - alpha) * b.r
        assert c.t == alpha * a.t + (1 - alpha) * b.t


@given(st.fractions(F(1, 16), F(1, 4), max_denominator=16), st.fractions(F(1, 4), F(3, 4), max_denominator=8), st.fractions(F(1, 100), F(1), max_denominator=100))
def test_bump_supported_and_peaked(delta, y, eps):
    b = bump(delta, y, eps)
    assert b(y - delta) == 0 == b(y + delta)
    assert b(y) == b.sup_norm()
    assert abs(b(y + delta / 2)) <= b.sup_norm()
