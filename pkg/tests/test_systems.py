from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubeavg import (
    Observable,
    ProbabilitySpace,
    System,
    Transformation,
    orbit_order,
    transformation_power_action,
    validate_system,
)
from cubeavg.errors import BadWeights, NonBijective, NotCommuting, NotMeasurePreserving
from cubeavg.random_instances import grid_system, random_instance
from cubeavg.systems import eps_digits, eps_from_digits, format_rational, parse_rational


def test_identity_on_two_points_is_valid():
    s = validate_system(["1/2", "1/2"], [[0, 1]])
    assert s.d == 1 and s.size == 2 and s.commuting


def test_non_bijective_image_rejected():
    with pytest.raises(NonBijective):
        validate_system(["1/2", "1/2"], [[1, 1]])


def test_bad_weights_rejected():
    with pytest.raises(BadWeights):
        validate_system(["1/2", "1/3"], [[0, 1]])
    with pytest.raises(BadWeights):
        validate_system(["-1/2", "3/2"], [[0, 1]])
    with pytest.raises(BadWeights):
        validate_system(["0.5", "0.5"], [[0, 1]])


def test_weight_moving_map_rejected():
    with pytest.raises(NotMeasurePreserving) as info:
        validate_system(["1/4", "3/4"], [[1, 0]])
    assert info.value.point == 0 and info.value.image_point == 1


def test_non_commuting_pair_witness():
    # 3-cycle against the transposition of 0 and 1
    with pytest.raises(NotCommuting) as info:
        validate_system(["1/3"] * 3, [[1, 2, 0], [1, 0, 2]])
    err = info.value
    assert (err.i, err.j) == (1, 2)
    assert 2 in err.points
    t1, t2 = [1, 2, 0], [1, 0, 2]
    assert t1[t2[2]] == 0 and t2[t1[2]] == 1
    # every point fails here; the first one is reported as the headline witness
    assert err.points == [0, 1, 2] and err.x == 0


def test_non_commuting_allowed_when_not_required():
    s = validate_system(["1/3"] * 3, [[1, 2, 0], [1, 0, 2]], require_commuting=False)
    assert not s.commuting
    assert s.commutation_witness() is not None


def test_power_action_empty_eps_is_identity():
    s = grid_system((2, 3), [(1, 0), (0, 1)])
    assert transformation_power_action(s, (1, 2), eps=()).is_identity()


def test_power_action_cycle_order():
    s = System(ProbabilitySpace.uniform(3), (Transformation.cycle(3),))
    assert transformation_power_action(s, (3,)).is_identity()
    assert transformation_power_action(s, (1,)) == Transformation.cycle(3)


def test_power_action_two_swaps_cancel():
    swap = Transformation((1, 0))
    s = System(ProbabilitySpace.uniform(2), (swap, swap))
    assert transformation_power_action(s, (1, 1), eps={1, 2}).is_identity()
    assert transformation_power_action(s, (1, 1), eps=0b01) == swap


def test_power_action_composes_right_to_left():
    t1, t2 = Transformation((1, 2, 0)), Transformation((1, 0, 2))
    s = System(ProbabilitySpace.uniform(3), (t1, t2), commuting=False)
    act = transformation_power_action(s, (1, 1))
    assert [act(x) for x in range(3)] == [t1(t2(x)) for x in range(3)]


def brute_order(t):
    k, p = 1, t
    while not p.is_identity():
        p = p.compose(t)
        k += 1
    return k


@pytest.mark.parametrize("image, expected", [
    ((0, 1, 2), 1),
    ((1, 2, 3, 4, 5, 0), 6),
    ((1, 0, 3, 4, 2), 6),
])
def test_orbit_order(image, expected):
    t = Transformation(image)
    assert orbit_order(t) == expected == brute_order(t)


def test_grid_orders():
    s = grid_system((2, 3), [(1, 0), (0, 1)])
    assert s.orders == (2, 3)


@given(st.permutations(range(7)), st.integers(-20, 20))
def test_power_matches_repeated_composition(perm, n):
    t = Transformation(tuple(perm))
    expected = Transformation.identity(7)
    step = t if n >= 0 else t.inverse()
    for _ in range(abs(n)):
        expected = step.compose(expected)
    assert t.power(n) == expected


@settings(max_examples=50)
@given(st.integers(0, 10**6))
def test_random_instances_validate(seed):
    inst = random_instance(seed)
    s = inst.system
    raw = [list(t.image) for t in s.transformations]
    again = validate_system(list(s.space.weights), raw)
    assert again.commuting
    assert all(abs(v) <= 1 for f in inst.functions.values() for v in f.values)


def test_random_instance_deterministic():
    a, b = random_instance(123), random_instance(123)
    assert a.system == b.system and a.functions == b.functions and a.subset == b.subset


def test_observable_arithmetic():
    space = ProbabilitySpace.uniform(3)
    f = Observable((Fraction(1), Fraction(-1, 2), Fraction(0)), space)
    assert (f * 2 - f).values == f.values
    assert f.compose(Transformation.cycle(3)).values == (Fraction(-1, 2), Fraction(0), Fraction(1))
    assert f.sup_norm() == 1
    assert Observable.indicator(space, [2]).is_indicator()


def test_rational_round_trip():
    for text in ("3/4", "-2/6", "5", "0"):
        q = parse_rational(text)
        assert parse_rational(format_rational(q)) == q
    assert format_rational(Fraction(-1, 3)) == "-1/3"
    with pytest.raises(ValueError):
        parse_rational("0.25")


def test_eps_digit_convention():
    assert eps_from_digits("10") == 0b01
    assert eps_digits(0b01, 2) == "10"
    assert eps_digits(0b11, 2) == "11"
