#!/usr/bin/env python3
"""
Acceptance Suite for the Remote Point Problem library

Runs the eleven acceptance items against exact brute-force oracles and
collects a summary that is byte-identical for a fixed seed and profile.

Key Features:
- Profiles: smoke (used by the unit tests), quick and full
- One BaseCheck subclass per acceptance item, each seeded independently of
  execution order, optionally run on a thread pool
- Summary JSON without timings; a Markdown report rendered with jinja2
"""

import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import BaseLoader, Environment
from pydantic import BaseModel

from base_check import BaseCheck, CheckFailed, CheckMetadata, CheckResult, CheckStatus
from cayley_spectral import (
    CayleyGraph, CosetSet, exact_confinement, lambda_by_characters, lambda_numeric, monte_carlo_confinement,
    subgroup_fraction, wilson_interval,
)
from group_core import (
    all_vertices, coordinate_subgroup, covering_radius, decode_vertices, element_array, enumerate_subgroup,
    enumerate_ball, random_subgroup, vertex_codes,
)
from group_schema import GroupKind, GroupSpec, NoHit, Subgroup, symmetric_group
from perm_engine import (
    coset_prefix_count, member_mask, parse_perm, schreier_sims, subgroup_member, subgroup_order,
)
from rpp_solver import (
    CoverParams, RppInstance, SolveMode, SolverAlgorithm, block_partition, block_radius, build_cover,
    dimension_ceiling, solve, solve_half_dim, verify_solution,
)
from smallbias import (
    BiasedSpace, construct_for_group, construct_prime_field, construct_random, measure_bias,
    quotient_lift, size_bound, symmetrize,
)

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9
Z2 = GroupSpec.abelian([2])
Z3 = GroupSpec.abelian([3])
Z4 = GroupSpec.abelian([4])
Z5 = GroupSpec.abelian([5])
S3 = symmetric_group(3)


class SuiteProfile(str, Enum):
    SMOKE = "smoke"
    QUICK = "quick"
    FULL = "full"


class ProfileScale(BaseModel):
    spaces_per_group: int
    construction_ns: List[int]
    construction_epsilons: List[str]
    composite_ns: List[int]
    composite_epsilons: List[str]
    field_moduli: List[int]
    lift_spaces: int
    cover_ns: List[int]
    cover_instances: int
    cover_order_cap: int
    max_symmetric_degree: int
    max_embedded_n: int
    max_member_n: int
    prefix_instances: int
    block_ns: List[int]
    block_ks: List[int]
    block_c: float = 0.25
    walk_graphs: List[Tuple[str, int]]
    walk_lengths: List[int]
    walk_trials: int
    walk_mc_configs: int


PROFILES: Dict[SuiteProfile, ProfileScale] = {
    SuiteProfile.SMOKE: ProfileScale(
        spaces_per_group=3, construction_ns=[2], construction_epsilons=["1/2"],
        composite_ns=[1], composite_epsilons=["1/2"], field_moduli=[3, 5], lift_spaces=3,
        cover_ns=[6], cover_instances=2, cover_order_cap=16,
        max_symmetric_degree=5, max_embedded_n=3, max_member_n=2, prefix_instances=10,
        block_ns=[8], block_ks=[1, 2],
        walk_graphs=[("Z2", 2), ("Z3", 1)], walk_lengths=[1, 2, 4], walk_trials=2000, walk_mc_configs=2,
    ),
    SuiteProfile.QUICK: ProfileScale(
        spaces_per_group=20, construction_ns=[2, 3, 4], construction_epsilons=["1/2", "1/4", "1/8"],
        composite_ns=[1, 2], composite_epsilons=["1/2"], field_moduli=[3, 5, 7], lift_spaces=20,
        cover_ns=[8, 9, 10], cover_instances=6, cover_order_cap=64,
        max_symmetric_degree=7, max_embedded_n=5, max_member_n=4, prefix_instances=100,
        block_ns=[8, 12], block_ks=[1, 2, 3],
        walk_graphs=[("Z2", 2), ("Z2", 3), ("Z3", 2), ("Z4", 2), ("S3", 1)],
        walk_lengths=[1, 2, 4, 8, 16, 32], walk_trials=20_000, walk_mc_configs=4,
    ),
    SuiteProfile.FULL: ProfileScale(
        spaces_per_group=50, construction_ns=[2, 3, 4, 5, 6], construction_epsilons=["1/2", "1/4", "1/8"],
        composite_ns=[1, 2], composite_epsilons=["1/2", "1/4", "1/8"], field_moduli=[3, 5, 7], lift_spaces=20,
        cover_ns=list(range(8, 15)), cover_instances=25, cover_order_cap=256,
        max_symmetric_degree=7, max_embedded_n=5, max_member_n=4, prefix_instances=100,
        block_ns=[8, 12, 16], block_ks=[1, 2, 3],
        walk_graphs=[("Z2", 2), ("Z2", 3), ("Z2", 4), ("Z2", 6), ("Z3", 2), ("Z3", 3), ("Z4", 2),
                     ("Z4", 3), ("S3", 2)],
        walk_lengths=[1, 2, 4, 8, 16, 32], walk_trials=100_000, walk_mc_configs=8,
    ),
}

NAMED_GROUPS = {"Z2": Z2, "Z3": Z3, "Z4": Z4, "Z5": Z5, "S3": S3}


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 31))


def _random_symmetric(group: GroupSpec, n: int, size: int, seed: int) -> BiasedSpace:
    return symmetrize(construct_random(group, n, size, seed))


def _cover_instances(scale: ProfileScale, rng: np.random.Generator,
                     groups: Sequence[GroupSpec] = (Z2, Z3, S3)) -> List[Tuple[Subgroup, int]]:
    """Random subgroups with |H| <= |G|^(n/2) (capped), radius alternating 1, 2."""
    out = []
    for group in groups:
        for i in range(scale.cover_instances):
            n = int(rng.choice(scale.cover_ns))
            max_order = min(group.order ** (n // 2), scale.cover_order_cap)
            out.append((random_subgroup(group, n, max_order, rng), 1 + i % 2))
    return out


def _remote_instances(scale: ProfileScale, rng: np.random.Generator,
                      groups: Sequence[GroupSpec]) -> List[Tuple[Subgroup, int]]:
    """Like _cover_instances, resampling with smaller order caps until H admits a point at distance > r."""
    out = []
    for group in groups:
        for i in range(scale.cover_instances):
            n, r = int(rng.choice(scale.cover_ns)), 1 + i % 2
            max_order = min(group.order ** (n // 2), scale.cover_order_cap)
            h = random_subgroup(group, n, max_order, rng)
            while covering_radius(h) <= r:
                max_order = max(1, max_order // group.order)
                h = random_subgroup(group, n, max_order, rng)
            out.append((h, r))
    return out


class BiasLambdaCheck(BaseCheck):
    metadata = CheckMetadata(1, "bias_equals_lambda", "dense lambda agrees with the character bias", "spectral")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        worst, count = 0.0, 0
        for group, n in [(Z2, 4), (Z3, 3), (GroupSpec.abelian([2, 4]), 2)]:
            for _ in range(scale.spaces_per_group):
                space = _random_symmetric(group, n, int(rng.integers(3, 13)), _seed(rng))
                graph = CayleyGraph(space=space)
                bias = measure_bias(space)
                numeric = lambda_numeric(graph).lambda_value
                self.require(abs(lambda_by_characters(graph).lambda_value - bias) <= TOLERANCE,
                             "character lambda differs from the bias", bias=bias)
                worst = max(worst, abs(numeric - bias))
                count += 1
        self.require(worst <= 1e-6, f"dense lambda differs from bias by {worst:.3g}", max_difference=worst)
        return {"spaces": count, "max_difference": float(f"{worst:.3g}")}


class ConstructionCheck(BaseCheck):
    metadata = CheckMetadata(2, "construction_quality", "constructed spaces meet their target bias", "smallbias")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        cases = [(g, n, e) for g in (Z2, Z3, Z5) for n in scale.construction_ns
                 for e in scale.construction_epsilons]
        cases += [(GroupSpec.abelian([2, 4]), n, e) for n in scale.composite_ns for e in scale.composite_epsilons]
        sizes = []
        for group, n, text in cases:
            eps = Fraction(text)
            space = construct_for_group(group, n, eps)
            label = f"{group.label()}^{n} eps={text}"
            self.require(space.verified and space.measured_bias <= eps + TOLERANCE,
                         f"{label}: measured bias {space.measured_bias} above target", case=label)
            bound = size_bound(group, n, eps)
            if bound is not None:
                self.require(space.size <= bound, f"{label}: |S| = {space.size} above 2 q^2 = {bound}",
                             case=label, provenance=space.provenance[0])
            sizes.append(space.size)
        return {"cases": len(cases), "largest_space": max(sizes)}


class PrimeFieldCheck(BaseCheck):
    metadata = CheckMetadata(3, "prime_field_exact", "prime-field bias equals (n - 1) / q", "smallbias")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        count = 0
        for q in scale.field_moduli:
            for n in range(2, q + 1):
                bias = construct_prime_field(q, n).measured_bias
                self.require(abs(bias - (n - 1) / q) <= 1e-12, f"q={q} n={n}: bias {bias} != {(n - 1)}/{q}")
                count += 1
        return {"cases": count}


class QuotientLiftCheck(BaseCheck):
    metadata = CheckMetadata(4, "quotient_lift", "lifting never increases the bias", "smallbias")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        count = 0
        for factors in ([2, 4], [2, 2, 6]):
            group = GroupSpec.abelian(factors)
            base_group = GroupSpec.abelian([factors[-1]] * len(factors))
            for _ in range(scale.lift_spaces):
                s0 = construct_random(base_group, 2, int(rng.integers(5, 31)), _seed(rng))
                lifted = measure_bias(quotient_lift(s0, group))
                self.require(lifted <= s0.measured_bias + TOLERANCE,
                             f"{group.label()}: lift bias {lifted} above base {s0.measured_bias}")
                count += 1
        return {"spaces": count}


class CoverSoundnessCheck(BaseCheck):
    metadata = CheckMetadata(5, "cover_soundness", "B(H, r) lies inside the cover union", "solver")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        instances = _cover_instances(scale, rng)
        largest_ball = 0
        for h, r in instances:
            cover = build_cover(h, r, CoverParams.for_radius(h.ambient_n, r))
            order = subgroup_order(h)
            for member in cover.members:
                bound = order * h.group.order ** len(member.coords)
                self.require(member.order <= bound, f"|H_A| = {member.order} above |H| |K_A| = {bound}")
            codes = enumerate_ball(h, r)
            largest_ball = max(largest_ball, len(codes))
            outside = decode_vertices(codes, h.group.order, h.ambient_n)
            for member in cover.members:
                outside = outside[~member_mask(member.subgroup, outside)]
            self.require(len(outside) == 0, f"{len(outside)} ball points escape the cover",
                         group=h.group.label(), n=h.ambient_n, r=r)
        return {"instances": len(instances), "largest_ball": largest_ball}


class SchreierSimsCheck(BaseCheck):
    metadata = CheckMetadata(6, "schreier_sims", "orders, membership and prefix counts match enumeration",
                             "perm")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        for m in range(2, scale.max_symmetric_degree + 1):
            gens = [parse_perm("(0 1)", m), parse_perm("(" + " ".join(map(str, range(m))) + ")", m)]
            order = schreier_sims(gens, m).order()
            self.require(order == math.factorial(m), f"|S{m}| computed as {order}")
        for group in (Z2, Z4, S3):
            for n in range(1, scale.max_embedded_n + 1):
                order = subgroup_order(coordinate_subgroup(group, n, range(n)))
                self.require(order == group.order ** n, f"|{group.label()}^{n}| computed as {order}")

        members = 0
        for group in (Z2, Z3, S3):
            for n in range(1, scale.max_member_n + 1):
                h = random_subgroup(group, n, group.order ** int(rng.integers(0, n + 1)), rng)
                elements = enumerate_subgroup(h)
                rows = all_vertices(group, n)
                mask = member_mask(h, rows)
                for row, fast in zip(rows, mask):
                    x = tuple(int(v) for v in row)
                    self.require(subgroup_member(h, x) == (x in elements) == bool(fast),
                                 f"membership of {x} disagrees with enumeration")
                    members += 1

        prefixes = 0
        groups = (Z2, Z3, Z4, S3)
        for i in range(scale.prefix_instances):
            group = groups[i % len(groups)]
            n = int(rng.integers(1, 4))
            h = random_subgroup(group, n, group.order ** int(rng.integers(0, n + 1)), rng)
            elements = enumerate_subgroup(h)
            for length in range(n + 1):
                for y in itertools.product(range(group.order), repeat=length):
                    expected = sum(1 for x in elements if x[:length] == y)
                    self.require(coset_prefix_count(h, y) == expected, f"prefix count of {y} is wrong")
                    prefixes += 1
        return {"membership_points": members, "prefixes": prefixes}


class GreedyCheck(BaseCheck):
    metadata = CheckMetadata(7, "greedy_solver", "greedy solutions verify whenever phi0 < 1", "solver")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        solved = skipped = 0
        for h, r in _cover_instances(scale, rng):
            cover = build_cover(h, r, CoverParams.for_radius(h.ambient_n, r))
            if cover.phi0() >= 1:
                skipped += 1
                continue
            inst = RppInstance(subgroup=h, r=r, mode=SolveMode.GENERAL_GREEDY)
            sol = solve_half_dim(inst)
            trace = [Fraction(v) for v in sol.certificate.trace]
            self.require(all(b <= a for a, b in zip(trace, trace[1:])) and trace[-1] < 1,
                         "estimator trace is not non-increasing below 1")
            report = verify_solution(inst, sol)
            self.require(report.distance_checked, "distance could not be checked by the oracle")
            solved += 1
        return {"solved": solved, "skipped_heavy_covers": skipped}


class HittingCheck(BaseCheck):
    metadata = CheckMetadata(8, "hitting_solver", "small-bias spaces hit outside every cover member", "solver")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        solved, bounds = 0, []
        for h, r in _remote_instances(scale, rng, groups=(Z2, Z3)):
            inst = RppInstance(subgroup=h, r=r, mode=SolveMode.ABELIAN_HITTING)
            label = f"{h.group.label()}^{h.ambient_n} |H|={subgroup_order(h)} r={r}"
            try:
                sol = solve_half_dim(inst)
            except NoHit as e:
                raise CheckFailed(f"{label}: no hit although a remote point exists", case=label, **e.detail) from e
            self.require(verify_solution(inst, sol).distance_checked, f"{label}: distance could not be checked")
            if sol.certificate.hitting_bound is not None:
                bounds.append(sol.certificate.hitting_bound)
            solved += 1
        return {"solved": solved, "largest_hitting_bound": float(f"{max(bounds, default=0.0):.6g}")}


class BlockReductionCheck(BaseCheck):
    metadata = CheckMetadata(9, "block_reduction", "block solutions add up to the guaranteed distance", "solver")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        distances = []
        for n in scale.block_ns:
            for k in scale.block_ks:
                h = random_subgroup(Z2, n, 2 ** k, rng)
                kk = max(1, dimension_ceiling(h))
                guaranteed = len(block_partition(n, kk)) * block_radius(kk, scale.block_c)
                sol = solve(RppInstance(subgroup=h, r=guaranteed - 1), SolverAlgorithm.GENERAL_K, c=scale.block_c)
                self.require(sol.verified_distance is not None and sol.verified_distance >= guaranteed,
                             f"n={n} k={k}: distance {sol.verified_distance} below {guaranteed}")
                distances.append(sol.verified_distance)
        return {"instances": len(distances), "distances": distances}


def _subgroups_for_walks(group: GroupSpec, n: int, rng: np.random.Generator) -> List[Subgroup]:
    subgroups = [coordinate_subgroup(group, n, coords)
                 for size in range(min(n, 3)) for coords in itertools.combinations(range(n), size)]
    subgroups.append(random_subgroup(group, n, group.order ** max(1, n - 1), rng))
    return subgroups


def _coset_shifts(h: Subgroup) -> List[Tuple[int, ...]]:
    group, n = h.group, h.ambient_n
    elements = element_array(h)
    seen, shifts = set(), []
    for row in all_vertices(group, n):
        key = int(vertex_codes(group.mul_array[row[None, :], elements], group.order).min())
        if key not in seen:
            seen.add(key)
            shifts.append(tuple(int(v) for v in row))
    return shifts


class RandomWalkCheck(BaseCheck):
    metadata = CheckMetadata(10, "random_walk_bound", "walk confinement stays below (beta + alpha)^t", "spectral")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        cases, mc_cases, misses = 0, 0, 0
        for name, n in scale.walk_graphs:
            group = NAMED_GROUPS[name]
            spaces = []
            if group.kind == GroupKind.ABELIAN:
                spaces.append(construct_for_group(group, n, Fraction(1, 2)))
            spaces.append(_random_symmetric(group, n, int(rng.integers(2, 7)), _seed(rng)))
            for space in spaces:
                graph = CayleyGraph(space=space)
                alpha = lambda_numeric(graph).lambda_value
                for h in _subgroups_for_walks(group, n, rng):
                    eta = subgroup_fraction(space, h)
                    for shift in _coset_shifts(h):
                        b = CosetSet(h, shift)
                        beta = Fraction(b.size, graph.vertex_count)
                        for t in scale.walk_lengths:
                            exact = exact_confinement(graph, b, t)
                            self.require(exact == beta * eta ** t, f"confinement {exact} != beta eta^t")
                            self.require(float(exact) <= (float(beta) + alpha) ** t + 1e-12,
                                         f"confinement {exact} above (beta + alpha)^t at t={t}")
                            cases += 1
                        if mc_cases < scale.walk_mc_configs and b.size < graph.vertex_count:
                            t = scale.walk_lengths[min(1, len(scale.walk_lengths) - 1)]
                            exact = float(exact_confinement(graph, b, t))
                            hits = monte_carlo_confinement(graph, b, t, scale.walk_trials, _seed(rng))
                            low, high = wilson_interval(hits, scale.walk_trials, 0.99)
                            misses += not (low - 1e-12 <= exact <= high + 1e-12)
                            mc_cases += 1
        self.require(misses <= 1, f"{misses} of {mc_cases} Wilson intervals missed the exact value")
        return {"exact_cases": cases, "monte_carlo_cases": mc_cases, "wilson_misses": misses}


class DeterminismCheck(BaseCheck):
    metadata = CheckMetadata(11, "determinism", "repeated runs give byte-identical results", "suite")

    def run(self, scale: ProfileScale, rng: np.random.Generator) -> Dict[str, Any]:
        seed = _seed(rng)
        for check in (BiasLambdaCheck(), BlockReductionCheck()):
            first, second = (canonical_json(check.execute(scale, seed).model_dump(mode="json")) for _ in range(2))
            self.require(first == second, f"{check.metadata.name} is not reproducible")
        return {"repeated_items": [1, 9]}


ALL_CHECKS: List[BaseCheck] = [
    BiasLambdaCheck(), ConstructionCheck(), PrimeFieldCheck(), QuotientLiftCheck(), CoverSoundnessCheck(),
    SchreierSimsCheck(), GreedyCheck(), HittingCheck(), BlockReductionCheck(), RandomWalkCheck(),
    DeterminismCheck(),
]


class SuiteSummary(BaseModel):
    profile: SuiteProfile
    seed: int
    results: List[CheckResult]
    passed: int
    failed: int
    overall_status: str

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def suite_run(profile: SuiteProfile = SuiteProfile.QUICK, seed: int = 0, jobs: int = 1,
              items: Optional[Sequence[int]] = None) -> SuiteSummary:
    scale = PROFILES[profile]
    checks = [c for c in ALL_CHECKS if items is None or c.metadata.item in items]
    logger.info(f"running {len(checks)} acceptance items, profile={profile.value} seed={seed}")
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda c: c.execute(scale, seed), checks))
    else:
        results = [c.execute(scale, seed) for c in checks]
    results.sort(key=lambda r: r.item)
    passed = sum(1 for r in results if r.status == CheckStatus.PASSED)
    return SuiteSummary(profile=profile, seed=seed, results=results, passed=passed,
                        failed=len(results) - passed,
                        overall_status="success" if passed == len(results) else "failed")


REPORT_TEMPLATE = """# Acceptance report

Profile `{{ summary.profile.value }}`, seed {{ summary.seed }}: **{{ summary.overall_status }}**
({{ summary.passed }} passed, {{ summary.failed }} failed)

| Item | Check | Status | Measured |
|------|-------|--------|----------|
{% for r in summary.results -%}
| {{ r.item }} | {{ r.name }} | {{ r.status.value }} | {% for k, v in r.measured.items() %}{{ k }}={{ v }}{% if not loop.last %}, {% endif %}{% endfor %} |
{% endfor %}
{% for r in summary.results if r.message %}
- item {{ r.item }}: {{ r.message }}
{% endfor %}
"""


def render_report(summary: SuiteSummary) -> str:
    env = Environment(loader=BaseLoader())
    template = env.from_string(REPORT_TEMPLATE)
    return template.render(summary=summary)


if __name__ == "__main__":
    result = suite_run(SuiteProfile.SMOKE, seed=7)
    print(render_report(result))
    exit(0 if result.overall_status == "success" else 1)
