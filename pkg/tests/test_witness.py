from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ifsline import (
    InfiniteWordSpec,
    affine_ifs,
    build_hr_family,
    demonstrate_wsp_failure,
    dirichlet_pair,
    find_common_fixed_point,
    interpolate_to_common_fixed_point,
    irrationalize,
    log_ratio_rationality,
    perturb_separate,
)
from ifsline.errors import BracketError, FactorizationLimitError, PreconditionError, ResourceLimitError, ValidationError
from ifsline.maps import compose
from ifsline.witness import CommonFixedPointWitness, IndependenceKind, convergents, dirichlet_inequality_holds


@pytest.fixture(scope="module")
def mixed():
    return affine_ifs([("1/2", 0), ("1/3", 0), ("1/3", "2/3")])


@pytest.fixture(scope="module")
def binary():
    return affine_ifs([("1/2", 0), ("1/2", "1/2")], rho="3/4", beta="1/4")


@pytest.fixture(scope="module")
def separated(binary):
    i = InfiniteWordSpec((1,), (2,))
    j = InfiniteWordSpec((2,), (1,))
    return i, j, perturb_separate(binary, i, j, F(1, 100))


# -- log-ratio rationality --------------------------------------------------------------


def test_log_ratio_cases():
    assert log_ratio_rationality(F(1, 2), F(1, 3)).kind is IndependenceKind.IRRATIONAL_CERTIFIED
    r = log_ratio_rationality(F(1, 2), F(1, 4))
    assert (r.kind, r.p, r.q) == (IndependenceKind.RATIONAL_RATIO, 1, 2)
    r = log_ratio_rationality(F(4, 9), F(8, 27))
    assert (r.p, r.q) == (2, 3)
    assert log_ratio_rationality(F(2, 3), F(1, 6)).kind is IndependenceKind.IRRATIONAL_CERTIFIED
    with pytest.raises(PreconditionError):
        log_ratio_rationality(F(3, 2), F(1, 2))
    with pytest.raises(FactorizationLimitError):
        log_ratio_rationality(F(1, 2**64 + 1), F(1, 2))


@given(st.fractions(F(1, 50), F(49, 50), max_denominator=50), st.integers(1, 6), st.integers(1, 6))
def test_powers_have_rational_log_ratio(c, p, q):
    r = log_ratio_rationality(c**p, c**q)
    assert r.kind is IndependenceKind.RATIONAL_RATIO
    assert F(r.p, r.q) == F(p, q)


@given(st.integers(1, 5), st.integers(1, 5))
def test_coprime_bases_are_independent(p, q):
    assert log_ratio_rationality(F(1, 2**p), F(1, 3**q)).kind is IndependenceKind.IRRATIONAL_CERTIFIED


# -- common fixed points --------------------------------------------------------------------


def test_common_fixed_point_search(mixed):
    wit = find_common_fixed_point(mixed, 3)
    assert (wit.omega, wit.tau, wit.x_tilde) == ((1,), (2,), 0)
    assert (wit.a, wit.b) == (F(1, 2), F(1, 3))
    assert wit.check(mixed) == 0
    assert CommonFixedPointWitness.from_dict(wit.to_dict()) == wit
    assert find_common_fixed_point(affine_ifs([("1/3", 0), ("1/3", "2/3")]), 3) is None


def test_witness_validation(mixed):
    with pytest.raises(ValidationError):
        CommonFixedPointWitness((1,), (1, 2), 0, F(1, 2), F(1, 3), log_ratio_rationality(F(1, 2), F(1, 3)))
    with pytest.raises(PreconditionError):
        CommonFixedPointWitness.from_ifs(mixed, (1,), (3,), 0)


# -- separating perturbation -------------------------------------------------------------------


def test_perturb_separate_frozen(separated):
    i, j, sep = separated
    assert (sep.case, sep.L, sep.N) == ("II", 2, 7)
    assert (sep.delta, sep.y, sep.map_index) == (F(1, 2), 1, 1)
    assert sep.eps == F(32, 5825)
    assert sep.lower_bound == F(43, 53444608)
    assert sep.difference.lo >= sep.lower_bound
    assert sep.distance < F(1, 100)
    assert sep.certified
    assert len(sep.system.maps[0].perturbations) == 1


def test_perturb_separate_preconditions(binary):
    i = InfiniteWordSpec((1,), (2,))
    with pytest.raises(PreconditionError):
        perturb_separate(binary, i, InfiniteWordSpec((1,), (1,)), F(1, 100))
    with pytest.raises(PreconditionError):
        perturb_separate(binary, i, InfiniteWordSpec((), (2,)), F(1, 100))
    tight = affine_ifs([("1/2", 0), ("1/2", "1/2")])
    with pytest.raises(PreconditionError):
        perturb_separate(tight, i, InfiniteWordSpec((2,), (1,)), F(1, 100))


# -- interpolation ------------------------------------------------------------------------------


def test_interpolation_finds_common_fixed_point(binary, separated):
    i, j, sep = separated
    res = interpolate_to_common_fixed_point(binary, sep.system, i=i, j=j)
    assert res.omega == (2,) + (1,) * 15
    assert res.tau == (1,) + (2,) * 15
    assert abs(float(res.alpha) - 0.2889404270099476) < 1e-9
    assert abs(float(res.x_tilde) - 0.5000076295109487) < 1e-9
    assert res.residual < F(1, 10**14)
    alpha, x = res
    assert (alpha, x) == (res.alpha, res.x_tilde)
    assert res.witness().omega == res.omega


def test_interpolation_affine_segment_is_exact():
    g = affine_ifs([("1/2", 0), ("1/2", "1/2")], ambient=(0, 1))
    gt = affine_ifs([("1/2", "1/2"), ("1/2", 0)], ambient=(0, 1))
    res = interpolate_to_common_fixed_point(g, gt, omega=(1, 2), tau=(2, 1))
    # the translations agree at alpha = 1/2, where both fixed points are 1/2
    assert res.exact
    assert (res.alpha, res.x_tilde) == (F(1, 2), F(1, 2))
    s = res.system
    assert compose(s, (1, 2))(res.x_tilde) == res.x_tilde == compose(s, (2, 1))(res.x_tilde)


def test_interpolation_without_sign_change(binary, separated):
    _, _, sep = separated
    with pytest.raises(BracketError):
        interpolate_to_common_fixed_point(binary, sep.system, omega=(1, 2), tau=(2, 1))


# -- irrationalization -----------------------------------------------------------------------------


def test_irrationalize_frozen():
    ifs = affine_ifs([("1/2", "-1/4"), ("1/2", "1/2"), ("1/2", "1/8")], ambient=(-1, 2), rho="3/4", beta="1/4")
    wit = CommonFixedPointWitness.from_ifs(ifs, (1, 2), (3, 1), 0)
    res = irrationalize(ifs, wit)
    assert res.eps == F(1, 1024)
    assert res.witness.a == F(32769, 131072)
    assert res.witness.b == F(1, 4)
    assert res.y == (F(1, 2),) and res.z == (F(-1, 4),)
    assert res.L(F(1, 2)) == 0 and res.L(F(-1, 4)) == 0
    assert res.witness.independence.kind is IndependenceKind.IRRATIONAL_CERTIFIED
    with pytest.raises(PreconditionError):
        irrationalize(affine_ifs([("1/2", "-1/4"), ("1/2", "1/2"), ("1/2", "1/8")], ambient=(-1, 2)), wit)


# -- Dirichlet pairs and the h_r family ---------------------------------------------------------------


def _float_convergents(x, count):
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    for _ in range(count):
        c = int(mpmath.floor(x))
        p0, q0, p1, q1 = p1, q1, c * p1 + p0, c * q1 + q0
        out.append((p1, q1))
        x = 1 / (x - c)
    return out


def test_convergents_match_high_precision_expansion():
    with mpmath.workdps(80):
        ref = _float_convergents(mpmath.log(2) / mpmath.log(3), 12)
    assert convergents(F(1, 2), F(1, 3), 12) == ref
    assert ref[:7] == [(0, 1), (1, 1), (1, 2), (2, 3), (5, 8), (12, 19), (41, 65)]


def test_dirichlet_pairs():
    assert dirichlet_pair(F(1, 2), F(1, 3), 2) == (1, 2)
    assert dirichlet_pair(F(1, 2), F(1, 3), 10) == (12, 19)
    assert dirichlet_inequality_holds(F(1, 2), F(1, 3), 5, 8) is True
    assert dirichlet_inequality_holds(F(1, 2), F(1, 4), 1, 2) is False
    with pytest.raises(PreconditionError):
        dirichlet_pair(F(1, 2), F(1, 4))


def test_hr_family(mixed):
    wit = find_common_fixed_point(mixed, 3)
    fam = build_hr_family(wit, 12, 19, ifs=mixed)
    # 0 <= r < sqrt(19) gives five maps, the last a pure power of the second word
    assert [(h.omega_power, h.tau_power) for h in fam] == [(76, 0), (57, 12), (38, 24), (19, 36), (0, 48)]
    assert fam[0].derivative == F(1, 2**76)
    # for a square j the bound r < sqrt(j) is strict
    assert [h.r for h in build_hr_family(wit, 5, 8, ifs=mixed)] == [0, 1, 2]
    assert len(build_hr_family(wit, 3, 4)) == 2
    with pytest.raises(ResourceLimitError):
        build_hr_family(wit, 12, 19, max_word_len=50)


# -- WSP failure demonstration -----------------------------------------------------------------------


def test_demonstration_frozen(mixed):
    wit = find_common_fixed_point(mixed, 3)
    demo = demonstrate_wsp_failure(mixed, wit)
    assert demo.dirichlet == (5, 8)
    assert (demo.count, demo.bound, demo.K, demo.N) == (23, 1, 4, 1)
    assert demo.eta == F(1, 2**8 * 3**5)
    assert demo.bound_met
    assert demo.to_dict()["count"] == 23


def test_demonstration_larger_target(mixed):
    wit = find_common_fixed_point(mixed, 3)
    demo = demonstrate_wsp_failure(mixed, wit, target_count=40)
    assert demo.dirichlet == (12, 19)
    assert demo.count == 105
    counts = [c for _, _, c in demo.history]
    assert counts[-1] >= 40 > max(counts[:-1])


def test_demonstration_preconditions(mixed):
    rational = CommonFixedPointWitness.from_ifs(affine_ifs([("1/2", 0), ("1/4", 0), ("1/4", "3/4")]), (1,), (2,), 0)
    with pytest.raises(PreconditionError):
        demonstrate_wsp_failure(affine_ifs([("1/2", 0), ("1/4", 0), ("1/4", "3/4")]), rational)
    wit = find_common_fixed_point(mixed, 3)
    with pytest.raises(ResourceLimitError):
        demonstrate_wsp_failure(mixed, wit, target_count=10**6, max_j=30)
