#!/usr/bin/env python3
"""
Tests for cover families, the hitting and greedy solvers, the block reduction
and solution verification
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from group_core import (
    all_vertices, covering_radius, distance_to_subgroup, element_array, enumerate_ball, random_subgroup,
    vertex_codes,
)
from group_schema import (
    EstimatorStuck, GroupSpec, NoHit, RegimeViolation, Subgroup, TupleElement, VerificationFailed,
    create_diagonal_instance, create_s3_diagonal_instance,
)
from perm_engine import subgroup_member, subgroup_order
from rpp_solver import (
    CoverParams, CoverStrategy, RppInstance, RppSolution, SolveMode, SolverAlgorithm, block_partition,
    block_radius, build_cover, estimator, greedy_conditional, greedy_trace, hit_with_space, scan_for_hit,
    solve, solve_general_k, solve_half_dim, verify_solution,
)
from smallbias import BiasedSpace

Z2 = GroupSpec.abelian([2])
Z3 = GroupSpec.abelian([3])
KLEIN = GroupSpec.abelian([2, 2])
KLEIN_TABLE = GroupSpec.from_table([[a ^ b for b in range(4)] for a in range(4)])


def pair_diagonal():
    return Subgroup.from_coords(Z2, 2, [(1, 1)])


def covered_codes(cover):
    codes = set()
    for member in cover.members:
        codes.update(vertex_codes(element_array(member.subgroup), cover.subgroup.group.order).tolist())
    return codes


def test_cover_params_logarithmic():
    params = CoverParams.logarithmic(16, 1)
    assert (params.ell, params.block_size, params.a_size) == (16, 1, 4)
    assert params.m_bound == 16 ** 10
    wide = CoverParams.logarithmic(1024, 0.1)
    assert (wide.ell, wide.block_size, wide.a_size) == (10, 103, 1)
    assert wide.covers(1) and not wide.covers(2)
    assert [len(b) for b in wide.blocks()] == [103] * 4 + [102] * 6


def test_cover_params_validation():
    with pytest.raises(ValueError):
        CoverParams(n=10, ell=3, block_size=3, a_size=1)
    with pytest.raises(ValueError):
        CoverParams(n=4, ell=4, block_size=1, a_size=5)


def test_cover_at_radius_zero_is_the_subgroup():
    h = create_diagonal_instance(4)
    cover = build_cover(h, 0, CoverParams.for_radius(4, 0))
    assert len(cover.members) == 1
    assert cover.member_orders() == [2]


@pytest.mark.parametrize("r,count", [(1, 4), (2, 6)])
def test_cover_examples(r, count):
    h = create_diagonal_instance(4)
    cover = build_cover(h, r, CoverParams(n=4, ell=4, block_size=1, a_size=r))
    assert len(cover.members) == count
    assert all(order == 2 * 2 ** r for order in cover.member_orders())
    ball = set(enumerate_ball(h, r).tolist())
    if r == 1:
        assert len(ball) == 10
    assert ball <= covered_codes(cover)


def test_cover_uses_every_union_of_a_size_blocks():
    h = create_diagonal_instance(4)
    cover = build_cover(h, 1, CoverParams(n=4, ell=4, block_size=1, a_size=2))
    assert len(cover.members) == 6
    assert cover.width == 2
    assert all(len(member.coords) == 2 for member in cover.members)
    assert set(enumerate_ball(h, 1).tolist()) <= covered_codes(cover)


def test_cover_rejects_large_subgroup():
    full = Subgroup.from_coords(Z2, 2, [(1, 0), (0, 1)])
    with pytest.raises(RegimeViolation):
        build_cover(full, 1, CoverParams.for_radius(2, 1))


def test_cover_rejects_narrow_params():
    with pytest.raises(RegimeViolation):
        build_cover(create_diagonal_instance(4), 2, CoverParams(n=4, ell=4, block_size=1, a_size=1))


def _instances(count, seed, groups=(Z2, Z3), sizes=(4, 5, 6)):
    rng = np.random.default_rng(seed)
    for i in range(count):
        group = groups[i % len(groups)]
        n = sizes[int(rng.integers(0, len(sizes)))]
        yield random_subgroup(group, n, group.order ** (n // 2), rng)


def test_cover_soundness_on_random_instances():
    for h in _instances(12, seed=5):
        for r in (1, 2):
            for params in (CoverParams.for_radius(h.ambient_n, r), CoverParams.logarithmic(h.ambient_n, 1)):
                if not params.covers(r):
                    continue
                cover = build_cover(h, r, params)
                assert set(enumerate_ball(h, r).tolist()) <= covered_codes(cover)
                for member in cover.members:
                    assert member.order <= subgroup_order(h) * h.group.order ** len(member.coords)


def test_hit_with_space_scans_in_order():
    cover = build_cover(pair_diagonal(), 0, CoverParams.for_radius(2, 0))
    space = BiasedSpace.from_rows(Z2, all_vertices(Z2, 2))
    assert hit_with_space(cover, space).coords == (0, 1)
    assert scan_for_hit(cover, space).index == 1


def test_hit_with_space_full_cover_never_hits():
    cover = build_cover(pair_diagonal(), 1, CoverParams.for_radius(2, 1))
    assert all(order == 4 for order in cover.member_orders())
    with pytest.raises(NoHit):
        hit_with_space(cover, BiasedSpace.from_rows(Z2, all_vertices(Z2, 2)))


def test_greedy_hand_trace():
    cover = build_cover(pair_diagonal(), 0, CoverParams.for_radius(2, 0))
    coords, trace = greedy_trace(cover)
    assert coords == (0, 1)
    assert trace == [Fraction(1, 2), Fraction(1, 2), Fraction(0)]
    assert greedy_conditional(cover).coords == (0, 1)


def test_greedy_stuck_when_cover_is_too_heavy():
    cover = build_cover(create_diagonal_instance(4), 1, CoverParams.for_radius(4, 1))
    assert cover.phi0() == 1
    with pytest.raises(EstimatorStuck):
        greedy_conditional(cover)


def test_greedy_on_s3_diagonal():
    h = create_s3_diagonal_instance(4)
    cover = build_cover(h, 1, CoverParams.for_radius(4, 1))
    x = greedy_conditional(cover)
    for member in cover.members:
        assert not subgroup_member(member.subgroup, x.coords)
    assert distance_to_subgroup(x, h) > 1


@pytest.mark.property_based
@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0, 1]))
def test_estimator_is_a_martingale(seed, r):
    h = next(_instances(1, seed, sizes=(4, 5)))
    cover = build_cover(h, r, CoverParams.for_radius(h.ambient_n, r))
    m = h.group.order
    rng = np.random.default_rng(seed)
    prefix = []
    for _ in range(h.ambient_n):
        current = estimator(cover, prefix)
        extensions = [estimator(cover, prefix + [a]) for a in range(m)]
        assert sum(extensions) / m == current
        prefix.append(int(rng.integers(0, m)))
    count = sum(1 for member in cover.members if subgroup_member(member.subgroup, prefix))
    assert estimator(cover, prefix) == count


def test_solve_half_dim_trivial_subgroup():
    inst = RppInstance(subgroup=Subgroup.from_coords(Z3, 3, []), r=0)
    sol = solve_half_dim(inst)
    assert sol.mode == SolveMode.GENERAL_GREEDY
    assert sol.x.coords == (1, 0, 0)


def test_solve_half_dim_forced_hitting():
    rng = np.random.default_rng(9)
    h = random_subgroup(Z3, 9, 3 ** 4, rng)
    inst = RppInstance(subgroup=h, r=1, mode=SolveMode.ABELIAN_HITTING)
    sol = solve_half_dim(inst)
    assert sol.certificate.kind == "hitting"
    assert sol.certificate.hitting_bound < 1
    assert Fraction(sol.certificate.alpha) == Fraction(1, 18)
    report = verify_solution(inst, sol)
    assert report.distance >= 2


def test_hitting_verdicts_are_recomputed():
    inst = RppInstance(subgroup=create_diagonal_instance(4), r=1, mode=SolveMode.ABELIAN_HITTING)
    sol = solve_half_dim(inst)
    assert sol.certificate.verdicts == [False] * sol.certificate.cover.member_count
    report = verify_solution(inst, sol)
    assert "per-member verdicts recomputed" in report.checks

    short = sol.certificate.model_copy(update={"verdicts": sol.certificate.verdicts[1:]})
    with pytest.raises(VerificationFailed):
        verify_solution(inst, sol.model_copy(update={"certificate": short}))


def test_solve_half_dim_binary_radius_two():
    found = 0
    for seed in range(5):
        h = random_subgroup(Z2, 12, 2 ** 6, np.random.default_rng(seed))
        if covering_radius(h) <= 2:
            continue
        inst = RppInstance(subgroup=h, r=2)
        sol = solve(inst, SolverAlgorithm.HALF_DIM)
        assert sol.verified_distance >= 3
        found += 1
        break
    assert found == 1


def test_table_and_abelian_presentations_agree():
    gens = [(1, 2, 3, 0)]
    abelian = RppInstance(subgroup=Subgroup.from_coords(KLEIN, 4, gens), r=1, mode=SolveMode.ABELIAN_HITTING)
    table = RppInstance(subgroup=Subgroup.from_coords(KLEIN_TABLE, 4, gens), r=1, mode=SolveMode.GENERAL_GREEDY)
    for inst in (abelian, table):
        sol = solve_half_dim(inst)
        assert verify_solution(inst, sol).distance > 1


def test_auto_mode_prefers_greedy():
    inst = RppInstance(subgroup=create_s3_diagonal_instance(4), r=1)
    assert solve_half_dim(inst).certificate.kind == "greedy"


def test_non_abelian_auto_mode_gets_stuck():
    s3 = create_s3_diagonal_instance(2)
    with pytest.raises(EstimatorStuck):
        solve_half_dim(RppInstance(subgroup=s3, r=1))


def test_logarithmic_strategy_checks_radius():
    inst = RppInstance(subgroup=create_diagonal_instance(4), r=3)
    with pytest.raises(RegimeViolation):
        solve_half_dim(inst, c=1, strategy=CoverStrategy.LOGARITHMIC)


def test_block_partition():
    assert block_partition(4, 1) == [(0, 1), (2, 3)]
    assert block_partition(9, 1) == [(0, 1), (2, 3), (4, 5), (6, 7, 8)]
    assert block_partition(16, 3) == [tuple(range(6)), tuple(range(6, 16))]
    with pytest.raises(RegimeViolation):
        block_partition(3, 2)
    assert block_radius(1, 1) == 1
    assert block_radius(3, 0.25) == 2
    assert block_radius(4, 1) == 8


def test_solve_general_k_diagonal():
    inst = RppInstance(subgroup=create_diagonal_instance(4), r=1)
    sol = solve(inst)
    assert sol.x.coords == (0, 1, 0, 1)
    assert sol.verified_distance == 2
    assert sol.certificate.partition == [[0, 1], [2, 3]]
    with pytest.raises(RegimeViolation):
        solve_general_k(RppInstance(subgroup=create_diagonal_instance(4), r=2))


def test_solve_general_k_single_block():
    h = Subgroup.from_coords(Z2, 4, [(1, 1, 0, 0), (0, 0, 1, 1)])
    sol = solve_general_k(RppInstance(subgroup=h, r=0), c=0.25)
    assert len(sol.certificate.partition) == 1
    assert sol.certificate.r_block == 1
    assert distance_to_subgroup(sol.x, h) >= 1


def test_solve_general_k_ternary():
    h = random_subgroup(Z3, 16, 9, np.random.default_rng(16))
    inst = RppInstance(subgroup=h, r=3)
    sol = solve(inst, c=0.25)
    blocks = len(sol.certificate.partition)
    assert sol.verified_distance >= blocks * sol.certificate.r_block


def test_verify_rejects_tampered_point():
    inst = RppInstance(subgroup=create_s3_diagonal_instance(4), r=1)
    sol = solve_half_dim(inst)
    tampered = sol.model_copy(update={"x": inst.subgroup.generators[0]})
    with pytest.raises(VerificationFailed):
        verify_solution(inst, tampered)

    blocks = solve_general_k(RppInstance(subgroup=create_diagonal_instance(4), r=1))
    forged = blocks.model_copy(update={"x": TupleElement(group=Z2, coords=(1, 1, 1, 1))})
    with pytest.raises(VerificationFailed):
        verify_solution(RppInstance(subgroup=create_diagonal_instance(4), r=1), forged)


def test_verify_greedy_run():
    inst = RppInstance(subgroup=create_s3_diagonal_instance(4), r=1)
    report = verify_solution(inst, solve_half_dim(inst))
    assert report.distance_checked and report.distance > 1
    assert any("estimator trace" in check for check in report.checks)


def test_solution_json_round_trip():
    inst = RppInstance(subgroup=create_diagonal_instance(4), r=1)
    sol = solve(inst)
    again = RppSolution.from_json(sol.to_json(), inst.group)
    assert again.to_json() == sol.to_json()
    assert RppInstance.from_json(inst.to_json()) == inst
    verify_solution(inst, again)


def test_certificate_must_match_mode():
    inst = RppInstance(subgroup=pair_diagonal(), r=0)
    sol = solve_half_dim(inst)
    with pytest.raises(ValueError):
        RppSolution(x=sol.x, algorithm=SolverAlgorithm.HALF_DIM, mode=SolveMode.ABELIAN_HITTING, r=0,
                    certificate=sol.certificate)


def test_every_greedy_solution_verifies():
    for h in _instances(10, seed=21, sizes=(6, 8)):
        inst = RppInstance(subgroup=h, r=1, mode=SolveMode.GENERAL_GREEDY)
        cover = build_cover(h, 1, CoverParams.for_radius(h.ambient_n, 1))
        if cover.phi0() >= 1:
            continue
        sol = solve_half_dim(inst)
        trace = [Fraction(v) for v in sol.certificate.trace]
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert verify_solution(inst, sol).distance > 1
