#!/usr/bin/env python3
"""
Tests for small-bias space constructions and the character sweep
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from group_core import all_vertices
from group_schema import GroupSpec, TooLarge, TooLargeToVerify
from smallbias import (
    BiasedSpace, Character, bias_spectrum, character_sum, construct_extension_field, construct_for_group,
    construct_prime_field, construct_random, construct_rounding, irreducible_polynomial, is_prime,
    linear_bias, measure_bias, multiset_is_symmetric, next_prime, quotient_lift, size_bound, symmetrize,
)

Z2 = GroupSpec.abelian([2])
Z3 = GroupSpec.abelian([3])
Z4 = GroupSpec.abelian([4])
Z5 = GroupSpec.abelian([5])
Z2Z4 = GroupSpec.abelian([2, 4])
TOL = 1e-12


def test_primes():
    assert [q for q in range(20) if is_prime(q)] == [2, 3, 5, 7, 11, 13, 17, 19]
    assert next_prime(6) == 7
    assert next_prime(6144) == 6151


def test_full_group_has_zero_bias():
    space = BiasedSpace.from_rows(Z3, all_vertices(Z3, 3))
    assert measure_bias(space) == pytest.approx(0, abs=TOL)
    assert measure_bias(BiasedSpace.from_rows(Z2, [[0], [1]])) == pytest.approx(0, abs=TOL)


def test_swap_pair_has_bias_one():
    assert measure_bias(BiasedSpace.from_rows(Z2, [[0, 1], [1, 0]])) == pytest.approx(1, abs=TOL)


def test_measure_bias_too_large():
    with pytest.raises(TooLarge):
        measure_bias(BiasedSpace.from_rows(Z3, [[0, 1, 2]]), sweep_limit=10)


def test_prime_field_examples():
    assert construct_prime_field(5, 1).measured_bias == pytest.approx(0, abs=TOL)
    s = construct_prime_field(3, 2)
    assert s.size == 9
    assert s.measured_bias == pytest.approx(1 / 3, abs=TOL)
    assert construct_prime_field(5, 3).measured_bias <= 2 / 5 + TOL


@pytest.mark.parametrize("q", [3, 5, 7])
def test_prime_field_bias_is_root_count(q):
    for n in range(2, q + 1):
        assert construct_prime_field(q, n).measured_bias == pytest.approx((n - 1) / q, abs=TOL)


def test_prime_field_rejects_composite():
    with pytest.raises(ValueError):
        construct_prime_field(6, 2)


def test_extension_field_bias():
    assert irreducible_polynomial(2, 3) == [1, 1, 0, 1]
    s = construct_extension_field(2, 3, 4)
    assert s.size == 64
    assert s.measured_bias == pytest.approx(3 / 8, abs=TOL)
    assert construct_extension_field(3, 2, 3).measured_bias == pytest.approx(2 / 9, abs=TOL)


@pytest.mark.parametrize("m", [2, 4])
def test_rounding_small(m):
    s = construct_rounding(m, 2, Fraction(1, 2))
    assert s.verified
    assert s.measured_bias <= 0.5 + 1e-9


def test_rounding_single_coordinate_matches_direct_sum():
    s = construct_rounding(3, 1, Fraction(1, 4))
    direct = abs(character_sum(s, [[1]]))
    assert s.measured_bias == pytest.approx(direct, abs=1e-12)
    assert s.measured_bias <= 0.25


def test_rounding_strict_unverifiable():
    with pytest.raises(TooLargeToVerify):
        construct_rounding(2, 30, Fraction(1, 2), sweep_limit=2 ** 10, strict=True)
    loose = construct_rounding(2, 30, Fraction(1, 2), sweep_limit=2 ** 10)
    assert not loose.verified and loose.measured_bias is None


def test_quotient_lift_examples():
    s = BiasedSpace.from_rows(Z2, [[0, 1], [1, 1]])
    assert quotient_lift(s, Z2).materialize().tolist() == [[0, 1], [1, 1]]
    z4z4 = GroupSpec.abelian([4, 4])
    three_two = z4z4.from_digits((3, 2))
    lifted = quotient_lift(BiasedSpace.from_rows(z4z4, [[three_two]]), Z2Z4)
    assert Z2Z4.digits(int(lifted.materialize()[0, 0])) == (1, 2)
    split = quotient_lift(BiasedSpace.from_rows(Z4, [[3, 2]]), Z2Z4)
    assert split.n == 1
    assert Z2Z4.digits(int(split.materialize()[0, 0])) == (1, 2)


def test_quotient_lift_shape_mismatch():
    with pytest.raises(ValueError):
        quotient_lift(BiasedSpace.from_rows(Z3, [[1, 2]]), Z2Z4)


@pytest.mark.parametrize("seed", range(10))
def test_quotient_lift_does_not_increase_bias(seed):
    base = construct_random(GroupSpec.abelian([4, 4]), 2, 12, seed)
    lifted = quotient_lift(base, Z2Z4)
    assert measure_bias(lifted) <= measure_bias(base) + 1e-9


def test_symmetrize():
    s = symmetrize(BiasedSpace.from_rows(Z3, [[1]]))
    assert sorted(s.materialize().ravel().tolist()) == [1, 2]
    assert s.symmetric and multiset_is_symmetric(s)
    assert not multiset_is_symmetric(BiasedSpace.from_rows(Z3, [[1]]))

    already = BiasedSpace.from_rows(Z3, [[1], [2], [0]])
    doubled = symmetrize(already)
    assert doubled.size == 6
    assert measure_bias(doubled) == pytest.approx(measure_bias(already), abs=TOL)


@pytest.mark.parametrize("seed", range(5))
def test_symmetrize_does_not_increase_bias(seed):
    s = construct_random(Z5, 2, 7, seed)
    assert measure_bias(symmetrize(s)) <= s.measured_bias + 1e-9


def test_construct_for_group_binary():
    s = construct_for_group(Z2, 4, Fraction(1, 2))
    assert s.symmetric and s.verified
    assert s.measured_bias <= 0.5 + 1e-9
    assert size_bound(Z2, 4, Fraction(1, 2)) == 2 * 7 ** 2
    assert s.size <= 2 * 7 ** 2


def test_construct_for_group_ternary():
    s = construct_for_group(Z3, 2, Fraction(1, 4))
    assert s.measured_bias <= 0.25 + 1e-9
    assert s.size <= 2 * 5 ** 2
    assert multiset_is_symmetric(s)


def test_construct_for_group_prime_field_when_q_is_the_modulus():
    s = construct_for_group(Z5, 2, Fraction(1, 4))
    assert s.modulus == 5 and s.size == 2 * 25
    assert s.provenance[0] == "prime_field(q=5)"


@pytest.mark.parametrize("group", [Z2, Z3, Z5], ids=lambda g: g.label())
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)], ids=str)
def test_construct_for_group_size_bound(group, n, eps):
    s = construct_for_group(group, n, eps)
    assert s.verified and s.measured_bias <= eps + 1e-9
    assert s.size <= size_bound(group, n, eps), s.provenance
    assert multiset_is_symmetric(s)


def test_construct_for_group_skips_oversized_extension_field():
    # F_{5^3} would need 2 * 125^2 points; the bound is 2 * 41^2
    s = construct_for_group(Z5, 6, Fraction(1, 8))
    assert s.size <= 2 * 41 ** 2
    assert not s.provenance[0].startswith("extension_field")


def test_construct_for_group_composite():
    s = construct_for_group(Z2Z4, 2, Fraction(1, 2))
    assert s.n == 2 and s.group == Z2Z4
    assert s.measured_bias <= 0.5 + 1e-9
    assert s.provenance[0].startswith("rounding")


def test_construct_for_group_vacuous_epsilon():
    s = construct_for_group(Z3, 3, 1)
    assert s.size == 1 and s.boundary
    assert s.materialize().tolist() == [[0, 0, 0]]


def test_character_sum_agrees_with_fft():
    s = construct_random(Z5, 2, 9, seed=4)
    spectrum = bias_spectrum(s)
    for a0, a1 in itertools.product(range(5), repeat=2):
        assert abs(character_sum(s, [[a0], [a1]])) == pytest.approx(spectrum[a0, a1], abs=1e-12)


def test_character_is_homomorphism():
    chi = Character(Z2Z4, [[1, 3], [0, 2]])
    for x, y in itertools.product(range(8), repeat=2):
        xy = Z2Z4.mul(x, y)
        assert chi.evaluate([x, y]) * chi.evaluate([y, x]) == pytest.approx(chi.evaluate([xy, xy]))
    assert Character(Z2Z4, [[0, 0], [2, 4]]).is_trivial


@pytest.mark.property_based
@settings(max_examples=40, deadline=None)
@given(st.sampled_from([3, 4]), st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=12))
def test_bias_is_bounded_by_linear_bias(d, rows):
    group = GroupSpec.abelian([d])
    space = BiasedSpace.from_rows(group, [[a % d, b % d] for a, b in rows])
    assert measure_bias(space) <= d * linear_bias(space) + 1e-9


def test_json_round_trip_of_explicit_space():
    s = symmetrize(construct_random(Z2Z4, 2, 5, seed=1))
    again = BiasedSpace.from_json(s.to_json())
    assert np.array_equal(again.materialize(), s.materialize())
    assert again.group == Z2Z4


def test_materialize_limit():
    with pytest.raises(TooLarge):
        construct_prime_field(7, 3).materialize(limit=10)
