"""
Permutation Engine

Deterministic Schreier-Sims over the point set Omega = G x [n], the embedding
of G^n into Sym(Omega), and the prefix-coset counting used by the greedy
remote point solver.

Key Features:
- Permutations are image tuples; p * q applies p first, so (p * q)[x] = q[p[x]]
- Base and strong generating sets with explicit witness transversals
- Exact (big-integer) group order, membership by sifting, pointwise stabilizers
  realised by forcing the stabilised points to the front of the base
- Embedded chains use one base point (1, i) per coordinate, so level i is the
  pointwise stabiliser of G x [i] and prefix queries never need a base change
- Orbit partitions and the b-boundedness check
- Cycle notation parsing and formatting ("(0 1)(2 3 4)")
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from group_schema import GroupMismatch, GroupSpec, Subgroup

logger = logging.getLogger(__name__)

Permutation = Tuple[int, ...]


def identity_perm(degree: int) -> Permutation:
    return tuple(range(degree))


def is_identity(p: Permutation) -> bool:
    return all(i == x for i, x in enumerate(p))


def check_perm(p: Sequence[int]) -> Permutation:
    if sorted(p) != list(range(len(p))):
        raise ValueError(f"not a permutation: {list(p)}")
    return tuple(p)


def mult_perm(p: Permutation, q: Permutation) -> Permutation:
    return tuple(q[i] for i in p)


def inv_perm(p: Permutation) -> Permutation:
    inverse = [0] * len(p)
    for i, x in enumerate(p):
        inverse[x] = i
    return tuple(inverse)


def first_moved_point(p: Permutation) -> Optional[int]:
    return next((i for i, x in enumerate(p) if i != x), None)


# Cycle notation

_CYCLE_RE = re.compile(r"\(\s*([\d\s,]*)\)")


def format_perm(p: Permutation) -> str:
    seen = set()
    cycles = []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            continue
        cycle = [start]
        seen.add(start)
        x = p[start]
        while x != start:
            seen.add(x)
            cycle.append(x)
            x = p[x]
        cycles.append("(" + " ".join(map(str, cycle)) + ")")
    return "".join(cycles) or "()"


def parse_perm(text: str, degree: int = 0) -> Permutation:
    """Parse "(0 1)(2 3 4)" into an image tuple; cycles compose left to right."""
    stripped = text.strip()
    if _CYCLE_RE.sub("", stripped).strip():
        raise ValueError(f"could not parse permutation {text!r}")
    cycles = []
    for match in _CYCLE_RE.finditer(stripped):
        body = match.group(1).replace(",", " ").split()
        if body:
            cycles.append([int(x) for x in body])
    degree = max(degree, max((max(c) for c in cycles), default=-1) + 1)
    result = identity_perm(degree)
    for cycle in cycles:
        images = list(range(degree))
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            images[a] = b
        result = mult_perm(result, check_perm(images))
    return result


# Orbits

@dataclass(frozen=True)
class OrbitPartition:
    blocks: Tuple[Tuple[int, ...], ...]

    @property
    def max_block(self) -> int:
        return max((len(b) for b in self.blocks), default=0)


def orbits(gens: Iterable[Permutation], degree: int) -> OrbitPartition:
    gens = list(gens)
    seen = [False] * degree
    blocks = []
    for start in range(degree):
        if seen[start]:
            continue
        seen[start] = True
        block = [start]
        for x in block:
            for g in gens:
                y = g[x]
                if not seen[y]:
                    seen[y] = True
                    block.append(y)
        blocks.append(tuple(sorted(block)))
    return OrbitPartition(blocks=tuple(blocks))


def is_b_bounded(partition: OrbitPartition, b: int) -> bool:
    return partition.max_block <= b


# Base and strong generating set

@dataclass
class Level:
    base_point: int
    generators: List[Permutation] = field(default_factory=list)
    transversal: Dict[int, Permutation] = field(default_factory=dict)

    def rebuild(self, degree: int) -> None:
        """Orbit of the base point with witnesses u such that u[base_point] = orbit point."""
        self.transversal = {self.base_point: identity_perm(degree)}
        queue = [self.base_point]
        for beta in queue:
            u = self.transversal[beta]
            for s in self.generators:
                gamma = s[beta]
                if gamma not in self.transversal:
                    self.transversal[gamma] = mult_perm(u, s)
                    queue.append(gamma)


class PermGroup:
    """A permutation group held as a stabiliser chain.

    Construction is single-threaded; once `schreier_sims` returns, the chain
    is never mutated and can serve membership and order queries concurrently.
    """

    def __init__(self, degree: int, levels: List[Level], strong_generators: List[Permutation]):
        self.degree = degree
        self.levels = levels
        self.strong_generators = strong_generators

    @property
    def base(self) -> List[int]:
        return [lvl.base_point for lvl in self.levels]

    @property
    def orbit_sizes(self) -> List[int]:
        return [len(lvl.transversal) for lvl in self.levels]

    def order(self, start: int = 0) -> int:
        total = 1
        for lvl in self.levels[start:]:
            total *= len(lvl.transversal)
        return total

    def sift(self, g: Permutation, start: int = 0, stop: Optional[int] = None) -> Tuple[Permutation, int]:
        """Strip g through levels [start, stop); returns the residue and the level reached."""
        stop = len(self.levels) if stop is None else stop
        for i in range(start, stop):
            lvl = self.levels[i]
            beta = g[lvl.base_point]
            u = lvl.transversal.get(beta)
            if u is None:
                return g, i
            g = mult_perm(g, inv_perm(u))
        return g, stop

    def member(self, g: Permutation) -> bool:
        if len(g) != self.degree:
            raise GroupMismatch(f"permutation degree {len(g)} does not match {self.degree}")
        residue, depth = self.sift(g)
        return depth == len(self.levels) and is_identity(residue)

    def stabilizer_chain(self, start: int) -> "PermGroup":
        """The subgroup fixing the first `start` base points, sharing level data."""
        levels = self.levels[start:]
        gens = levels[0].generators if levels else []
        return PermGroup(self.degree, levels, list(gens))

    def to_json(self) -> Dict:
        return {
            "degree": self.degree,
            "base": self.base,
            "orbit_sizes": self.orbit_sizes,
            "order": self.order(),
            "strong_generators": [list(g) for g in self.strong_generators],
        }


def schreier_sims(gens: Iterable[Permutation], degree: int,
                  base_hint: Sequence[int] = ()) -> PermGroup:
    """Deterministic Schreier-Sims; the base starts with `base_hint` and is extended as needed."""
    strong: List[Permutation] = []
    for g in gens:
        g = check_perm(g)
        if len(g) != degree:
            raise GroupMismatch(f"generator of degree {len(g)} on {degree} points")
        if not is_identity(g) and g not in strong:
            strong.append(g)

    base = list(dict.fromkeys(base_hint))
    for g in strong:
        if all(g[b] == b for b in base):
            base.append(first_moved_point(g))

    levels = [Level(base_point=b) for b in base]
    for i, lvl in enumerate(levels):
        lvl.generators = [g for g in strong if all(g[b] == b for b in base[:i])]
        lvl.rebuild(degree)

    group = PermGroup(degree, levels, strong)
    i = len(levels) - 1
    while i >= 0:
        added_at = _check_level(group, i)
        if added_at is None:
            i -= 1
        else:
            i = added_at
    logger.debug(f"schreier_sims: degree={degree} base={group.base} orbits={group.orbit_sizes}")
    return group


def _check_level(group: PermGroup, i: int) -> Optional[int]:
    """Sift the Schreier generators of level i; on a non-trivial residue add it and return its level."""
    lvl = group.levels[i]
    if len(lvl.transversal) == 1 and not lvl.generators:
        return None
    for beta, u in list(lvl.transversal.items()):
        for s in lvl.generators:
            w = lvl.transversal[s[beta]]
            schreier = mult_perm(mult_perm(u, s), inv_perm(w))
            if is_identity(schreier):
                continue
            residue, j = group.sift(schreier, start=i + 1)
            if j == len(group.levels) and is_identity(residue):
                continue
            if j == len(group.levels):
                group.levels.append(Level(base_point=first_moved_point(residue)))
            group.strong_generators.append(residue)
            for level in group.levels[i + 1:j + 1]:
                level.generators.append(residue)
                level.rebuild(group.degree)
            return j
    return None


def pointwise_stabilizer(pg: PermGroup, delta: Iterable[int]) -> PermGroup:
    delta = sorted(set(delta))
    if not delta:
        return pg
    rebuilt = schreier_sims(pg.strong_generators, pg.degree, base_hint=delta + pg.base)
    return rebuilt.stabilizer_chain(len(delta))


# Embedding of G^n into Sym(G x [n])

def point_index(group: GroupSpec, a: int, i: int) -> int:
    return i * group.order + a


def embed_element(group: GroupSpec, coords: Sequence[int]) -> Permutation:
    """(a, i) -> (a * g_i, i)."""
    mul = group.table
    m = group.order
    images: List[int] = []
    for i, g in enumerate(coords):
        images.extend(i * m + mul[a][g] for a in range(m))
    return tuple(images)


def embed(h: Subgroup) -> List[Permutation]:
    return [embed_element(h.group, g.coords) for g in h.generators]


def embedded_base(group: GroupSpec, n: int) -> List[int]:
    return [point_index(group, group.identity, i) for i in range(n)]


def subgroup_chain(h: Subgroup) -> PermGroup:
    """The cached stabiliser chain of the embedded subgroup."""
    def build() -> PermGroup:
        degree = h.group.order * h.ambient_n
        return schreier_sims(embed(h), degree, base_hint=embedded_base(h.group, h.ambient_n))
    return h.cached("bsgs", build)


def subgroup_order(h: Subgroup) -> int:
    return subgroup_chain(h).order()


def subgroup_member(h: Subgroup, coords: Sequence[int]) -> bool:
    if len(coords) != h.ambient_n:
        raise GroupMismatch(f"element of length {len(coords)} for n={h.ambient_n}")
    return subgroup_chain(h).member(embed_element(h.group, coords))


def transversal_table(h: Subgroup) -> Tuple[np.ndarray, np.ndarray]:
    """Per coordinate i and value a: whether some level-i transversal element has x_i = a, and its coordinates."""
    def build() -> Tuple[np.ndarray, np.ndarray]:
        group, n = h.group, h.ambient_n
        m, e = group.order, group.identity
        chain = subgroup_chain(h)
        present = np.zeros((n, m), dtype=bool)
        coords = np.full((n, m, n), e, dtype=np.int64)
        for i, lvl in enumerate(chain.levels):
            for beta, u in lvl.transversal.items():
                a = beta - i * m
                present[i, a] = True
                coords[i, a] = [u[j * m + e] - j * m for j in range(n)]
        present.setflags(write=False)
        coords.setflags(write=False)
        return present, coords
    return h.cached("transversal_table", build)


def member_mask(h: Subgroup, rows: np.ndarray) -> np.ndarray:
    """Vectorised sifting of many elements of G^n through the embedded chain."""
    rows = np.array(rows, dtype=np.int64, ndmin=2)
    if rows.shape[1] != h.ambient_n:
        raise GroupMismatch(f"rows of length {rows.shape[1]} for n={h.ambient_n}")
    present, coords = transversal_table(h)
    mul, inv = h.group.mul_array, h.group.inv_array
    ok = np.ones(len(rows), dtype=bool)
    for i in range(h.ambient_n):
        a = rows[:, i]
        ok &= present[i, a]
        rows = mul[rows, inv[coords[i, a]]]
    return ok & (rows == h.group.identity).all(axis=1)


def _padded_prefix(h: Subgroup, y: Sequence[int]) -> Permutation:
    if not 0 <= len(y) <= h.ambient_n:
        raise GroupMismatch(f"prefix of length {len(y)} for n={h.ambient_n}")
    return embed_element(h.group, list(y) + [h.group.identity] * (h.ambient_n - len(y)))


def projection_member(h: Subgroup, y: Sequence[int]) -> bool:
    """Is y in the projection of H onto its first len(y) coordinates?"""
    chain = subgroup_chain(h)
    _, depth = chain.sift(_padded_prefix(h, y), stop=len(y))
    return depth == len(y)


def coset_prefix_count(h: Subgroup, y: Sequence[int]) -> int:
    """|{x in H : x_j = y_j for j < len(y)}|."""
    chain = subgroup_chain(h)
    _, depth = chain.sift(_padded_prefix(h, y), stop=len(y))
    if depth < len(y):
        return 0
    return chain.order(start=len(y))


if __name__ == "__main__":
    s5 = schreier_sims([parse_perm("(0 1)", 5), parse_perm("(0 1 2 3 4)")], 5)
    print(f"|S5| = {s5.order()}, base = {s5.base}")
