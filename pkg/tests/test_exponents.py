from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from logmult.exponents import (
    HALF,
    InterpolationDiagnosis,
    PTuple,
    brute_lambda,
    counterexample_slots,
    interpolation_plan,
    interpolation_step,
    lambda_prime,
    lambda_st,
    lambda_st_dprime,
    lambda_st_prime,
    mn_k,
    mx_k,
    select_split,
    sharp_lambda,
)


def reciprocal_tuples(n):
    """Random exact reciprocal tuples with denominators <= 64 and sum <= 1."""
    def build(draw_fractions):
        fracs = []
        remaining = F(1)
        for numerator, denominator in draw_fractions:
            r = F(numerator, denominator)
            r = min(r, remaining)
            fracs.append(r)
            remaining -= r
        return PTuple(tuple(fracs))

    frac = st.tuples(st.integers(0, 64), st.integers(1, 64)).map(
        lambda nd: (min(nd[0], nd[1]), nd[1])
    )
    return st.lists(frac, min_size=n, max_size=n).map(build)


def test_mx_k_duplicate_convention():
    assert mx_k([3, 3, 2, 1], 3) == 2
    assert mx_k([3, 3, 2, 1], 1) == 3
    assert mx_k([F(1, 2), F(1, 2), 0], 2) == F(1, 2)
    assert mn_k([3, 3, 2, 1], 1) == 1


def test_mx_k_out_of_range():
    with pytest.raises(ValueError):
        mx_k([1, 2], 3)


def test_sharp_lambda_worked_examples():
    assert sharp_lambda(PTuple.from_ps([4, 4, 4])) == F(1, 2)
    for n in (2, 3, 4, 5):
        equal = PTuple((F(1, n + 1),) * n)
        assert sharp_lambda(equal) == F(n - 1, n + 1)
        vertex = PTuple((F(1),) + (F(0),) * (n - 1))
        assert sharp_lambda(vertex) == F(1)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples))
def test_sharp_equals_brute(pt):
    assert sharp_lambda(pt) == brute_lambda(pt)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples))
def test_sharp_lambda_floor(pt):
    floor = F(pt.n - 1, pt.n + 1)
    lam = sharp_lambda(pt)
    assert lam >= floor
    equal = all(c == pt.full_point[0] for c in pt.full_point)
    assert (lam == floor) == equal


def test_lambda_variants_equal_quarters():
    pt = PTuple.from_ps([4, 4, 4])
    assert lambda_st(pt, 1, 2) == F(1, 2)
    assert lambda_st_prime(pt, 1, 2, 3) == F(3, 4)
    assert lambda_prime(pt) == F(3, 4)
    assert lambda_st_dprime(pt, 1, 2) == F(1, 4) + F(1, 2)


def test_lambda_prime_sharp_at_vertex():
    pt = PTuple((F(1), F(0), F(0)))
    assert lambda_prime(pt) == F(1) == sharp_lambda(pt)


def test_lambda_variant_index_validation():
    pt = PTuple.from_ps([4, 4, 4])
    with pytest.raises(ValueError):
        lambda_st(pt, 2, 2)
    with pytest.raises(ValueError):
        lambda_st_prime(pt, 1, 2, 2)


def _admissible_tau(pt, s, t):
    point = pt.full_point
    taus = [u for u in range(1, pt.n + 2) if u not in (s, t)]
    return max(taus, key=lambda u: (point[u - 1], -u))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples))
def test_lambda_prime_dominates_pairwise(pt):
    lam_p = lambda_prime(pt)
    for s in range(1, pt.n + 2):
        for t in range(s + 1, pt.n + 2):
            tau = _admissible_tau(pt, s, t)
            assert lambda_st_prime(pt, s, t, tau) <= lam_p


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples))
def test_dprime_bounded_by_dominant_reciprocal(pt):
    # the dominant slot carries the absolute-value term
    point = pt.full_point
    for u in range(1, pt.n + 2):
        if point[u - 1] < HALF:
            continue
        for t in range(1, pt.n + 2):
            if t == u:
                continue
            assert lambda_st_dprime(pt, u, t) <= point[u - 1]


def test_select_split_worked_example():
    pt = PTuple((F(1, 8), F(1, 4), F(3, 8)))
    plan = select_split(pt, 1, 3)
    assert plan.kind == "standard"
    assert plan.j0 == (2,)
    assert plan.alpha == 4
    assert plan.q0_reciprocal == F(1, 8)
    assert plan.q1_reciprocal == F(1, 8)
    assert plan.gamma == F(1, 2)


def test_select_split_exact_half_branch():
    # r = (1/4, 1/4, 1/4, 1/4): s=1, t=2: scanning 3 gives exactly 1/2
    pt = PTuple((F(1, 4), F(1, 4), F(1, 4)))
    plan = select_split(pt, 1, 2)
    assert plan.kind == "exact-half"
    assert plan.gamma is None
    assert plan.j0 == (3,)


def test_select_split_dominant_coordinate():
    # full point (1/8, 1/8, 5/8, 1/8): coordinate 3 exceeds 1/2, off the pair (1, 2)
    pt = PTuple((F(1, 8), F(1, 8), F(5, 8)))
    plan = select_split(pt, 1, 2)
    assert plan.kind == "alpha-exceeds-half"
    assert plan.alpha == 3
    assert plan.j0 == ()
    assert plan.group_sum(pt) + plan.q0_reciprocal == HALF


def test_select_split_pair_carries_dominant():
    pt = PTuple((F(5, 8), F(1, 8), F(1, 8)))
    plan = select_split(pt, 1, 2)
    assert plan.kind == "unshifted-square"
    assert plan.gamma is None


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples), st.data())
def test_split_identities_hold_exactly(pt, data):
    n1 = pt.n + 1
    s = data.draw(st.integers(1, n1 - 1))
    t = data.draw(st.integers(s + 1, n1))
    plan = select_split(pt, s, t)
    point = pt.full_point
    if plan.kind in ("standard", "alpha-exceeds-half"):
        assert plan.group_sum(pt) + plan.q0_reciprocal == HALF
        r_alpha = point[plan.alpha - 1]
        assert plan.gamma * r_alpha == plan.q0_reciprocal
        assert plan.q0_reciprocal + plan.q1_reciprocal == r_alpha
        assert 0 < plan.gamma < 1
    elif plan.kind == "exact-half":
        assert plan.group_sum(pt) == HALF
    else:
        assert plan.kind == "unshifted-square"
        assert point[s - 1] >= HALF or point[t - 1] >= HALF


def test_interpolation_step_examples():
    point, e = interpolation_step([1, 0, 0], 1, [0, 1, 0], 1, F(1, 2))
    assert point == (F(1, 2), F(1, 2), F(0))
    assert e == 1
    p0, e0 = interpolation_step([1, 0, 0], F(1), [0, 0, 1], F(2), 0)
    assert p0 == (F(1), F(0), F(0)) and e0 == 1
    p1, e1 = interpolation_step([1, 0, 0], F(1), [0, 0, 1], F(2), 1)
    assert p1 == (F(0), F(0), F(1)) and e1 == 2


def test_interpolation_plan_single_step():
    plan = interpolation_plan([F(1, 2), F(1, 2), F(0), F(0)])
    assert len(plan.steps) == 1
    assert plan.steps[0].theta == F(1, 2)
    assert plan.final_exponent == 1
    assert plan.achieves_sharp
    assert plan.fold() == (plan.target, F(1))


def test_interpolation_plan_two_steps():
    plan = interpolation_plan([F(1, 3), F(1, 3), F(1, 3), F(0)])
    assert [s.theta for s in plan.steps] == [F(1, 2), F(1, 3)]
    assert plan.final_exponent == 1
    assert plan.target_sharp_exponent == F(2, 3)
    assert not plan.achieves_sharp
    assert plan.fold()[0] == plan.target


def test_interpolation_plan_interior_diagnosis():
    out = interpolation_plan([F(1, 4)] * 4)
    assert isinstance(out, InterpolationDiagnosis)
    assert "align" in out.reason


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 5).flatmap(reciprocal_tuples))
def test_plan_fold_reproduces_target(pt):
    out = interpolation_plan(pt)
    if isinstance(out, InterpolationDiagnosis):
        assert all(c > 0 for c in pt.full_point)
        return
    point, exponent = out.fold()
    assert point == out.target
    assert exponent == out.final_exponent == 1


def test_counterexample_slots_plain_and_adjoint():
    s, t, note = counterexample_slots(PTuple((F(1, 8), F(1, 4), F(3, 8))))
    assert (s, t) == (1, 2) and note is None
    # dual reciprocal 0 is among the two smallest
    s, t, note = counterexample_slots(PTuple((F(1, 2), F(1, 4), F(1, 4))))
    assert t == 4 and note is not None and "transpose" in note
