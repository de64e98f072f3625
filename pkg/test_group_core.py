#!/usr/bin/env python3
"""
Tests for group arithmetic, Hamming geometry and the brute-force oracles
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from group_core import (
    all_vertices, contains, coordinate_subgroup, covering_radius, dimension, distance_to_subgroup,
    enumerate_ball, enumerate_subgroup, exact_log, feasibility_check, hamming, in_ball, inv, mul,
    project, random_element, random_subgroup, vertex_codes, weight,
)
from group_schema import (
    CapExceeded, GroupMismatch, GroupSpec, InvalidParameter, Subgroup, TupleElement,
    create_diagonal_instance, symmetric_group,
)

Z2 = GroupSpec.abelian([2])
Z3 = GroupSpec.abelian([3])
Z4 = GroupSpec.abelian([4])
Z6 = GroupSpec.abelian([6])
S3 = symmetric_group(3)


def el(group, *coords):
    return TupleElement(group=group, coords=tuple(coords))


def test_mul_cyclic():
    assert mul(el(Z6, 4), el(Z6, 5)).coords == (3,)


def test_mul_identity():
    a = el(S3, 3, 5, 1)
    assert mul(a, TupleElement.identity(S3, 3)) == a


def test_symmetric_table_matches_composition():
    perms = list(itertools.permutations(range(3)))
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            composed = tuple(q[p[x]] for x in range(3))
            assert perms[S3.mul(i, j)] == composed


def test_mul_rejects_mismatch():
    with pytest.raises(GroupMismatch):
        mul(el(Z3, 1, 2), el(Z3, 1))
    with pytest.raises(GroupMismatch):
        mul(el(Z3, 1), el(Z2, 1))


def test_inverse():
    assert inv(el(Z3, 1, 2)).coords == (2, 1)
    assert inv(TupleElement.identity(Z3, 2)).coords == (0, 0)
    for g in range(S3.order):
        x = el(S3, g)
        assert mul(x, inv(x)).coords == (S3.identity,)


def test_weight():
    assert weight(el(Z3, 1, 0, 2, 0)) == 2
    assert weight(TupleElement.identity(Z3, 4)) == 0


def test_weight_mean_of_uniform_points():
    n, samples = 20, 10_000
    rng = np.random.default_rng(11)
    weights = [weight(random_element(Z2, n, rng)) for _ in range(samples)]
    sigma = np.sqrt(n / 4 / samples)
    assert abs(np.mean(weights) - n / 2) <= 5 * sigma


def test_hamming():
    assert hamming(el(Z2, 0, 1, 1), el(Z2, 1, 1, 0)) == 2
    x = el(Z3, 2, 1, 0)
    assert hamming(x, x) == 0


def test_hamming_equals_weight_of_quotient_nonabelian():
    rng = np.random.default_rng(5)
    for _ in range(50):
        x, y = random_element(S3, 5, rng), random_element(S3, 5, rng)
        assert hamming(x, y) == weight(mul(inv(x), y))


@pytest.mark.property_based
@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), min_size=6, max_size=6))
def test_hamming_is_metric(rows):
    z4 = GroupSpec.abelian([4])
    x, y, z = (el(z4, *col) for col in zip(*rows))
    assert hamming(x, z) <= hamming(x, y) + hamming(y, z)
    assert hamming(x, y) == hamming(y, x)
    assert (hamming(x, y) == 0) == (x == y)


def test_enumerate_small_subgroups():
    assert enumerate_subgroup(Subgroup.from_coords(Z2, 2, [(1, 1)]), cap=16) == {(0, 0), (1, 1)}
    assert enumerate_subgroup(Subgroup.from_coords(Z2, 3, []), cap=16) == {(0, 0, 0)}
    assert enumerate_subgroup(Subgroup.from_coords(Z4, 2, [(1, 2)]), cap=16) == {(0, 0), (1, 2), (2, 0), (3, 2)}


def test_enumerate_cap():
    with pytest.raises(CapExceeded):
        enumerate_subgroup(coordinate_subgroup(Z2, 6, range(6)), cap=10)


def test_enumerate_invariant_under_generator_order():
    gens = [(1, 2, 0, 3), (0, 3, 3, 1), (2, 0, 1, 1)]
    expected = enumerate_subgroup(Subgroup.from_coords(Z4, 4, gens), cap=4 ** 4)
    for order in itertools.permutations(gens):
        assert enumerate_subgroup(Subgroup.from_coords(Z4, 4, list(order)), cap=4 ** 4) == expected


def test_enumerated_subgroup_is_closed():
    h = Subgroup.from_coords(S3, 3, [(1, 2, 3), (4, 4, 0)])
    elements = enumerate_subgroup(h, cap=6 ** 3)
    assert (0, 0, 0) in elements
    for a in elements:
        assert inv(el(S3, *a)).coords in elements
        for b in elements:
            assert mul(el(S3, *a), el(S3, *b)).coords in elements


def test_dimension():
    report = dimension(Subgroup.from_coords(Z2, 2, [(1, 1)]))
    assert report.order == 2
    assert report.delta == 1.0
    assert report.relative == 0.5
    assert Fraction(report.exact_relative) == Fraction(1, 2)

    full = dimension(coordinate_subgroup(Z2, 3, range(3)))
    assert full.order == 8 and full.delta == 3.0

    z4 = dimension(Subgroup.from_coords(Z4, 2, [(1, 2)]))
    assert z4.order == 4 and z4.exact_delta == "1"


def test_dimension_keeps_twelve_decimals():
    z6 = GroupSpec.abelian([6])
    report = dimension(Subgroup.from_coords(z6, 2, [(1, 0), (0, 3)]))
    assert report.order == 12 and report.exact_delta is None
    assert report.delta == round(math.log(12) / math.log(6), 12)
    assert report.relative == round(report.delta / 2, 12)


def test_exact_log():
    assert exact_log(2, 4) == Fraction(1, 2)
    assert exact_log(27, 9) == Fraction(3, 2)
    assert exact_log(6, 4) is None
    assert exact_log(1, 6) == 0


def test_distance_to_subgroup():
    h = create_diagonal_instance(4)
    assert distance_to_subgroup(el(Z2, 1, 1, 1, 1), h, cap=16) == 0
    assert distance_to_subgroup(el(Z2, 0, 1, 0, 1), h, cap=16) == 2
    assert distance_to_subgroup(el(Z2, 1, 0, 0, 0), h, cap=16) == 1


def test_ball_matches_distance_oracle():
    h = Subgroup.from_coords(Z3, 4, [(1, 2, 0, 1)])
    vertices = all_vertices(Z3, 4)
    for r in range(4):
        ball = set(enumerate_ball(h, r, cap=3 ** 4).tolist())
        for row, code in zip(vertices, vertex_codes(vertices, 3)):
            x = el(Z3, *map(int, row))
            assert (int(code) in ball) == in_ball(x, h, r, cap=81)


def test_covering_radius():
    assert covering_radius(create_diagonal_instance(4), cap=16) == 2
    assert covering_radius(coordinate_subgroup(Z3, 3, range(3)), cap=27) == 0


def test_feasibility_examples():
    assert feasibility_check(10, 0, 0, Fraction(9, 10), Z2).feasible
    report = feasibility_check(100, 50, 1, 0.05, Z2)
    assert report.feasible
    assert report.rhs_value == pytest.approx(86.92, abs=0.01)
    assert not feasibility_check(100, 90, 20, 0.05, Z2).feasible


def test_feasibility_ranges():
    with pytest.raises(InvalidParameter):
        feasibility_check(10, 0, 11, 0.1, Z2)
    with pytest.raises(InvalidParameter):
        feasibility_check(10, 0, 1, 1, Z2)


def test_group_validation():
    with pytest.raises(ValueError):
        GroupSpec.abelian([2, 3])
    with pytest.raises(ValueError):
        GroupSpec.abelian([1])
    loop = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(ValueError):
        GroupSpec.from_table(loop)
    with pytest.raises(ValueError):
        GroupSpec.from_table([[0, 1], [1, 2]])


@pytest.mark.parametrize("group", [S3, GroupSpec.abelian([2, 4]), GroupSpec.abelian([2, 2, 6])])
def test_group_axioms_exhaustive(group):
    m = group.order
    e = group.identity
    for a in range(m):
        assert group.mul(a, e) == a == group.mul(e, a)
        assert group.mul(a, group.inv(a)) == e
        for b in range(m):
            for c in range(m):
                assert group.mul(group.mul(a, b), c) == group.mul(a, group.mul(b, c))


def test_group_json_round_trip():
    for group in (Z4, GroupSpec.abelian([2, 4]), S3):
        assert GroupSpec.from_json(group.to_json()) == group
    h = Subgroup.from_coords(S3, 2, [(1, 2)])
    assert Subgroup.from_json(h.to_json(include_group=True)) == h


def test_project_and_contains():
    h = Subgroup.from_coords(Z2, 3, [(1, 1, 0), (0, 1, 1)])
    assert enumerate_subgroup(project(h, [0]), cap=4) == {(0,), (1,)}
    assert contains(h, el(Z2, 1, 0, 1))
    assert not contains(h, el(Z2, 1, 0, 0))


def test_random_subgroup_respects_bound_and_seed():
    a = random_subgroup(Z3, 6, 27, np.random.default_rng(3))
    b = random_subgroup(Z3, 6, 27, np.random.default_rng(3))
    assert a == b
    assert len(enumerate_subgroup(a, cap=3 ** 6)) <= 27
