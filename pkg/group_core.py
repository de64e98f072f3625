"""
Group Core

Exact arithmetic in G^n, Hamming geometry, and the brute-force oracles every
solver result is checked against.

Key Features:
- Coordinatewise product, inverse, weight and Hamming distance
- Subgroup closure with an explicit cap (CapExceeded past it)
- Dimension log_|G| |H| from the exact stabiliser-chain order
- Distance to a subgroup, Hamming balls around a subgroup and the covering
  radius, all by vectorised sweeps over lexicographic vertex codes
- The counting-argument feasibility check for the remote point problem
- Coordinate subgroups, projections and seeded random instances
"""

import logging
import math
from fractions import Fraction
from typing import FrozenSet, Iterable, List, Optional, Sequence, Union

import numpy as np

from group_schema import (
    DEFAULT_CONFIG, CapExceeded, Coords, DimensionReport, FeasibilityReport, GroupMismatch,
    GroupSpec, InvalidParameter, Subgroup, TooLarge, TupleElement,
)
from perm_engine import subgroup_order

logger = logging.getLogger(__name__)

Rational = Union[int, float, Fraction]

MAX_CODE_SPACE = 2 ** 62


def _check_pair(a: TupleElement, b: TupleElement) -> None:
    if a.group != b.group:
        raise GroupMismatch("elements belong to different groups")
    if a.n != b.n:
        raise GroupMismatch(f"dimension mismatch: {a.n} vs {b.n}", left=a.n, right=b.n)


def mul(a: TupleElement, b: TupleElement) -> TupleElement:
    _check_pair(a, b)
    table = a.group.table
    return TupleElement(group=a.group, coords=tuple(table[x][y] for x, y in zip(a.coords, b.coords)))


def inv(a: TupleElement) -> TupleElement:
    inverses = a.group.inverses
    return TupleElement(group=a.group, coords=tuple(inverses[x] for x in a.coords))


def weight(x: TupleElement) -> int:
    e = x.group.identity
    return sum(1 for c in x.coords if c != e)


def hamming(x: TupleElement, y: TupleElement) -> int:
    _check_pair(x, y)
    return sum(1 for a, b in zip(x.coords, y.coords) if a != b)


# Vertex codes: x -> sum x_i |G|^(n-1-i)

def code_weights(order: int, n: int) -> np.ndarray:
    if order ** n > MAX_CODE_SPACE:
        raise TooLarge(f"|G|^n = {order}^{n} exceeds the vertex code range", order=order, n=n)
    return order ** np.arange(n - 1, -1, -1, dtype=np.int64)


def vertex_codes(rows: np.ndarray, order: int) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.int64)
    return rows @ code_weights(order, rows.shape[1])


def decode_vertices(codes: np.ndarray, order: int, n: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    weights = code_weights(order, n)
    return (codes[:, None] // weights[None, :]) % order


def all_vertices(group: GroupSpec, n: int) -> np.ndarray:
    size = group.order ** n
    return decode_vertices(np.arange(size, dtype=np.int64), group.order, n)


# Enumeration oracles

def element_array(h: Subgroup, cap: Optional[int] = None) -> np.ndarray:
    """All elements of H as an |H| x n array, in breadth-first discovery order."""
    cap = DEFAULT_CONFIG.enumeration_cap if cap is None else cap
    cached = h.cached_elements
    if cached is None:
        cached = h.cached("elements", lambda: _closure(h, cap))
    if len(cached) > cap:
        raise CapExceeded(f"subgroup has {len(cached)} elements, cap is {cap}", cap=cap, size=len(cached))
    return cached


def _closure(h: Subgroup, cap: int) -> np.ndarray:
    group, n = h.group, h.ambient_n
    mul_table = group.mul_array
    gens = np.asarray(h.generator_coords, dtype=np.int64).reshape(-1, n)
    frontier = np.full((1, n), group.identity, dtype=np.int64)
    seen = {frontier[0].tobytes()}
    blocks = [frontier]
    while len(frontier):
        fresh = []
        for g in gens:
            for row in mul_table[frontier, g]:
                key = row.tobytes()
                if key not in seen:
                    seen.add(key)
                    fresh.append(row)
                    if len(seen) > cap:
                        raise CapExceeded(f"closure grew past cap {cap}", cap=cap)
        frontier = np.asarray(fresh, dtype=np.int64).reshape(-1, n)
        blocks.append(frontier)
    elements = np.concatenate(blocks)
    elements.setflags(write=False)
    logger.debug(f"enumerated subgroup of order {len(elements)} in {group.label()}^{n}")
    return elements


def enumerate_subgroup(h: Subgroup, cap: Optional[int] = None) -> FrozenSet[Coords]:
    return frozenset(tuple(int(v) for v in row) for row in element_array(h, cap))


def contains(h: Subgroup, x: TupleElement, cap: Optional[int] = None) -> bool:
    rows = element_array(h, cap)
    return bool((rows == np.asarray(x.coords)).all(axis=1).any())


def exact_log(value: int, base: int) -> Optional[Fraction]:
    """log_base(value) as a fraction when both are powers of a common integer."""
    if value < 1 or base < 2:
        return None
    if value == 1:
        return Fraction(0)
    for root in range(2, base + 1):
        p = _power_of(base, root)
        if p is None:
            continue
        q = _power_of(value, root)
        return Fraction(q, p) if q is not None else None
    return None


def _power_of(value: int, root: int) -> Optional[int]:
    k = 0
    while value % root == 0 and value > 1:
        value //= root
        k += 1
    return k if value == 1 else None


def dimension(h: Subgroup) -> DimensionReport:
    order = subgroup_order(h)
    base = h.group.order
    delta = round(math.log(order) / math.log(base), 12)
    exact = exact_log(order, base)
    return DimensionReport(
        order=order,
        delta=delta,
        exact_delta=str(exact) if exact is not None else None,
        relative=round(delta / h.ambient_n, 12),
        exact_relative=str(exact / h.ambient_n) if exact is not None else None,
    )


def distance_to_subgroup(x: TupleElement, h: Subgroup, cap: Optional[int] = None) -> int:
    if x.group != h.group or x.n != h.ambient_n:
        raise GroupMismatch("point and subgroup live in different ambient groups")
    rows = element_array(h, cap)
    return int((rows != np.asarray(x.coords)).sum(axis=1).min())


def in_ball(x: TupleElement, h: Subgroup, r: int, cap: Optional[int] = None) -> bool:
    return distance_to_subgroup(x, h, cap) <= r


def _neighbourhood(codes: np.ndarray, order: int, weights: np.ndarray) -> np.ndarray:
    parts = [codes]
    for w in weights:
        base = codes - ((codes // w) % order) * w
        parts.extend(base + a * w for a in range(order))
    return np.unique(np.concatenate(parts))


def enumerate_ball(h: Subgroup, r: int, cap: Optional[int] = None) -> np.ndarray:
    """Sorted vertex codes of B(H, r) = H * B(r)."""
    cap = DEFAULT_CONFIG.enumeration_cap if cap is None else cap
    order = h.group.order
    weights = code_weights(order, h.ambient_n)
    current = np.unique(vertex_codes(element_array(h, cap), order))
    for _ in range(r):
        current = _neighbourhood(current, order, weights)
        if len(current) > cap:
            raise CapExceeded(f"ball grew past cap {cap}", cap=cap, size=len(current))
    return current


def covering_radius(h: Subgroup, cap: Optional[int] = None) -> int:
    """max over x in G^n of Delta(x, H), by breadth-first search from H."""
    cap = DEFAULT_CONFIG.sweep_limit if cap is None else cap
    order, n = h.group.order, h.ambient_n
    size = order ** n
    if size > cap:
        raise TooLarge(f"|G|^n = {size} exceeds sweep cap {cap}", size=size, cap=cap)
    weights = code_weights(order, n)
    dist = np.full(size, -1, dtype=np.int64)
    frontier = np.unique(vertex_codes(element_array(h, cap), order))
    dist[frontier] = 0
    radius = 0
    while len(frontier):
        reached = _neighbourhood(frontier, order, weights)
        frontier = reached[dist[reached] < 0]
        if len(frontier):
            radius += 1
            dist[frontier] = radius
    return radius


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def feasibility_check(n: int, k_bound: Rational, r: int, slack_epsilon: Rational,
                      group: GroupSpec) -> FeasibilityReport:
    if n < 1 or not 0 <= r <= n:
        raise InvalidParameter(f"need 0 <= r <= n, got r={r}, n={n}")
    if not 0 < slack_epsilon < 1:
        raise InvalidParameter(f"slack epsilon must lie in (0, 1), got {slack_epsilon}")
    rhs = n * (1 - binary_entropy(r / n) / math.log2(group.order) - float(slack_epsilon))
    return FeasibilityReport(
        n=n, k_bound=float(k_bound), r=r, slack_epsilon=float(slack_epsilon),
        feasible=float(k_bound) + r <= rhs, rhs_value=rhs,
    )


# Coordinate subgroups and projections

def coordinate_generators(group: GroupSpec, n: int, coords: Iterable[int]) -> List[Coords]:
    """Generators of G^n(S): elements supported on the coordinate set S."""
    e = group.identity
    gens = []
    for i in sorted(set(coords)):
        if not 0 <= i < n:
            raise GroupMismatch(f"coordinate {i} outside [0, {n})")
        for g in group.element_generators():
            row = [e] * n
            row[i] = g
            gens.append(tuple(row))
    return gens


def coordinate_subgroup(group: GroupSpec, n: int, coords: Iterable[int]) -> Subgroup:
    return Subgroup.from_coords(group, n, coordinate_generators(group, n, coords))


def project(h: Subgroup, coords: Sequence[int]) -> Subgroup:
    coords = list(coords)
    if not coords:
        raise GroupMismatch("projection needs at least one coordinate")
    return Subgroup.from_coords(h.group, len(coords), [tuple(g[i] for i in coords) for g in h.generator_coords])


# Seeded instances

def random_element(group: GroupSpec, n: int, rng: np.random.Generator) -> TupleElement:
    return TupleElement(group=group, coords=tuple(int(v) for v in rng.integers(0, group.order, size=n)))


def random_subgroup(group: GroupSpec, n: int, max_order: int, rng: np.random.Generator,
                    attempts: Optional[int] = None) -> Subgroup:
    """Greedily add random generators while |H| stays within max_order."""
    gens: List[Coords] = []
    current = Subgroup.from_coords(group, n, gens)
    for _ in range(attempts if attempts is not None else 2 * n + 4):
        candidate = random_element(group, n, rng).coords
        trial = Subgroup.from_coords(group, n, gens + [candidate])
        order = subgroup_order(trial)
        if order <= max_order and order > subgroup_order(current):
            gens.append(candidate)
            current = trial
        if subgroup_order(current) == max_order:
            break
    return current


if __name__ == "__main__":
    z2 = GroupSpec.abelian([2])
    h = Subgroup.from_coords(z2, 4, [(1, 1, 1, 1)])
    x = TupleElement(group=z2, coords=(0, 1, 0, 1))
    print(f"distance = {distance_to_subgroup(x, h, cap=16)}, dimension = {dimension(h)}")
