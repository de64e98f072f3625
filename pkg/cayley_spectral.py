"""
Cayley Spectral Tools

Cayley graphs C(G^n, S) for symmetric multisets S, their normalised second
eigenvalue, random walks, and confinement of walks inside vertex sets.

Key Features:
- lambda by characters (identical to the bias of S) and by dense eigensolve
- Seeded walks with uniform steps over the multiset (repetitions count)
- Exact confinement probabilities by transfer-matrix products for small graphs
  and batched Monte-Carlo with Wilson intervals above that
- Exact subgroup fractions |S n H| / |S| via vectorised sifting
- The walk length parameter and the finite hitting bound for cover families
"""

import logging
import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.stats import norm

from group_core import all_vertices, code_weights, exact_log, vertex_codes
from group_schema import (
    DEFAULT_CONFIG, Coords, GroupKind, GroupMismatch, GroupSpec, InvalidParameter, Subgroup, TooLarge,
)
from perm_engine import member_mask, subgroup_order
from smallbias import BiasedSpace, measure_bias, multiset_is_symmetric

logger = logging.getLogger(__name__)

LOW_RATIO_THRESHOLD = 0.1
WALK_BATCH = 4096


class SpectrumMethod(str, Enum):
    CHARACTER = "character"
    NUMERIC = "numeric"


class ConfinementMethod(str, Enum):
    AUTO = "auto"
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"


class CayleyGraph(BaseModel):
    """C(G^n, S): vertices G^n, edges x -> x s for every s in the multiset S."""

    model_config = ConfigDict(frozen=True)

    space: BiasedSpace

    @model_validator(mode="after")
    def validate_symmetric(self) -> "CayleyGraph":
        if not (self.space.symmetric or multiset_is_symmetric(self.space)):
            raise ValueError("Cayley graph needs a symmetric multiset S")
        return self

    @property
    def group(self) -> GroupSpec:
        return self.space.group

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def degree(self) -> int:
        return self.space.size

    @property
    def vertex_count(self) -> int:
        return self.group.order ** self.n


class SpectrumReport(BaseModel):
    lambda_value: float = Field(serialization_alias="lambda")
    method: SpectrumMethod
    alpha_target: Optional[float] = None
    degree: int
    lambda_sqrt_degree: float
    low_degree_ratio: bool

    @model_validator(mode="after")
    def validate_range(self) -> "SpectrumReport":
        if not -1e-9 <= self.lambda_value <= 1 + 1e-9:
            raise ValueError(f"normalised lambda {self.lambda_value} outside [0, 1]")
        return self

    def is_expander(self, alpha: float) -> bool:
        return self.lambda_value <= alpha

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _report(value: float, method: SpectrumMethod, degree: int, alpha: Optional[float]) -> SpectrumReport:
    ratio = value * math.sqrt(degree)
    if ratio < LOW_RATIO_THRESHOLD:
        logger.warning(f"lambda * sqrt(D) = {ratio:.4g} is below {LOW_RATIO_THRESHOLD}")
    return SpectrumReport(lambda_value=value, method=method, alpha_target=alpha, degree=degree,
                          lambda_sqrt_degree=ratio, low_degree_ratio=ratio < LOW_RATIO_THRESHOLD)


def lambda_by_characters(g: CayleyGraph, alpha: Optional[float] = None,
                         sweep_limit: Optional[int] = None) -> SpectrumReport:
    return _report(measure_bias(g.space, sweep_limit), SpectrumMethod.CHARACTER, g.degree, alpha)


def adjacency_matrix(g: CayleyGraph, limit: Optional[int] = None) -> np.ndarray:
    """Integer adjacency counts A[x, xs], vertices in lexicographic code order."""
    limit = DEFAULT_CONFIG.numeric_limit if limit is None else limit
    size = g.vertex_count
    if size > limit:
        raise TooLarge(f"N = {size} exceeds the dense limit {limit}", vertices=size, limit=limit)
    order, n = g.group.order, g.n
    vertices = all_vertices(g.group, n)
    weights = code_weights(order, n)
    codes = []
    for rows in g.space.chunks():
        codes.append(rows @ weights)
    distinct, counts = np.unique(np.concatenate(codes), return_counts=True)
    steps = (distinct[:, None] // weights[None, :]) % order
    adjacency = np.zeros((size, size), dtype=np.int64)
    source = np.arange(size)
    for step, count in zip(steps, counts):
        targets = g.group.mul_array[vertices, step[None, :]] @ weights
        adjacency[source, targets] += count
    return adjacency


def lambda_numeric(g: CayleyGraph, alpha: Optional[float] = None,
                   limit: Optional[int] = None) -> SpectrumReport:
    normalised = adjacency_matrix(g, limit) / g.degree
    eigenvalues = np.sort(np.abs(np.linalg.eigvalsh(normalised)))[::-1]
    value = float(eigenvalues[1]) if len(eigenvalues) > 1 else 0.0
    return _report(min(value, 1.0), SpectrumMethod.NUMERIC, g.degree, alpha)


def second_eigenvalue(g: CayleyGraph, alpha: Optional[float] = None) -> SpectrumReport:
    if g.group.kind == GroupKind.ABELIAN:
        try:
            return lambda_by_characters(g, alpha)
        except TooLarge:
            pass
    return lambda_numeric(g, alpha)


# Walks

class WalkTrace(BaseModel):
    group: GroupSpec
    seed: int
    t: int
    vertices: Tuple[Coords, ...]
    steps: Tuple[Coords, ...]

    @model_validator(mode="after")
    def validate_walk(self) -> "WalkTrace":
        if len(self.vertices) != self.t + 1 or len(self.steps) != self.t:
            raise ValueError(f"walk of length {self.t} needs {self.t + 1} vertices and {self.t} steps")
        table = self.group.table
        for i, s in enumerate(self.steps):
            expected = tuple(table[a][b] for a, b in zip(self.vertices[i], s))
            if expected != self.vertices[i + 1]:
                raise ValueError(f"step {i + 1} does not follow the Cayley graph edge")
        return self

    def to_json(self) -> Dict[str, Any]:
        return {"seed": self.seed, "t": self.t, "vertices": [list(v) for v in self.vertices],
                "steps": [list(s) for s in self.steps]}


def random_walk(g: CayleyGraph, t: int, seed: int) -> WalkTrace:
    if t < 0:
        raise InvalidParameter("walk length must be non-negative")
    rng = np.random.default_rng(seed)
    start = rng.integers(0, g.group.order, size=g.n)
    positions = rng.integers(0, g.degree, size=t)
    steps = g.space.take(positions) if t else np.zeros((0, g.n), dtype=np.int64)
    vertices = [start]
    for s in steps:
        vertices.append(g.group.mul_array[vertices[-1], s])
    return WalkTrace(
        group=g.group, seed=seed, t=t,
        vertices=tuple(tuple(int(a) for a in v) for v in vertices),
        steps=tuple(tuple(int(a) for a in s) for s in steps),
    )


def walk_endpoints(g: CayleyGraph, t: int, walks: int, seed: int,
                   start: Optional[Sequence[int]] = None) -> np.ndarray:
    """Final vertex codes of independent walks, batched with spawned seeds.

    Walks start at uniform vertices, or all at `start` when given.
    """
    if start is not None and len(start) != g.n:
        raise InvalidParameter(f"start vertex has {len(start)} coordinates, graph has n={g.n}")
    children = np.random.SeedSequence(seed).spawn(math.ceil(walks / WALK_BATCH))
    weights = code_weights(g.group.order, g.n)
    out = []
    for b, child in enumerate(children):
        rng = np.random.default_rng(child)
        size = min(WALK_BATCH, walks - b * WALK_BATCH)
        if start is None:
            states = rng.integers(0, g.group.order, size=(size, g.n))
        else:
            states = np.tile(np.asarray(start, dtype=np.int64), (size, 1))
        for _ in range(t):
            states = g.group.mul_array[states, g.space.take(rng.integers(0, g.degree, size=size))]
        out.append(states @ weights)
    return np.concatenate(out)


# Vertex sets

class VertexSet(ABC):
    @property
    @abstractmethod
    def size(self) -> int:
        pass

    @abstractmethod
    def contains(self, rows: np.ndarray) -> np.ndarray:
        pass


class CosetSet(VertexSet):
    """The left coset shift * H."""

    def __init__(self, h: Subgroup, shift: Optional[Sequence[int]] = None):
        self.h = h
        self.shift = np.asarray(shift if shift is not None else [h.group.identity] * h.ambient_n, dtype=np.int64)
        self._order = subgroup_order(h)

    @property
    def size(self) -> int:
        return self._order

    def contains(self, rows: np.ndarray) -> np.ndarray:
        group = self.h.group
        return member_mask(self.h, group.mul_array[group.inv_array[self.shift][None, :], rows])


class MaskSet(VertexSet):
    def __init__(self, group: GroupSpec, n: int, mask: np.ndarray):
        self.group, self.n = group, n
        self.mask = np.asarray(mask, dtype=bool)
        if len(self.mask) != group.order ** n:
            raise GroupMismatch(f"mask needs {group.order ** n} entries")

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def contains(self, rows: np.ndarray) -> np.ndarray:
        return self.mask[vertex_codes(rows, self.group.order)]


class PredicateSet(VertexSet):
    def __init__(self, group: GroupSpec, n: int, predicate: Callable[[Tuple[int, ...]], bool]):
        self.group, self.n, self.predicate = group, n, predicate
        self._size = int(self.contains(all_vertices(group, n)).sum())

    @property
    def size(self) -> int:
        return self._size

    def contains(self, rows: np.ndarray) -> np.ndarray:
        return np.fromiter((bool(self.predicate(tuple(int(a) for a in r))) for r in rows), dtype=bool, count=len(rows))


# Confinement

class ConfinementReport(BaseModel):
    method: ConfinementMethod
    t: int
    trials: int = 0
    estimate: float
    wilson_low: Optional[float] = None
    wilson_high: Optional[float] = None
    confidence: float = 0.99
    exact: Optional[str] = None
    beta: float
    alpha: float
    reference_bound: float
    respects_bound: bool


def wilson_interval(successes: int, total: int, confidence: float = 0.99) -> Tuple[float, float]:
    if total <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(1 - (1 - confidence) / 2))
    p = successes / total
    z2 = z * z
    denom = 1.0 + z2 / total
    centre = (p + z2 / (2.0 * total)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / total + z2 / (4.0 * total * total)) / denom
    return max(0.0, centre - margin), min(1.0, centre + margin)


def exact_confinement(g: CayleyGraph, b: VertexSet, t: int, limit: Optional[int] = None) -> Fraction:
    """P[v0, ..., vt all in B] for a uniform start, as an exact fraction."""
    limit = DEFAULT_CONFIG.exact_chain_limit if limit is None else limit
    adjacency = adjacency_matrix(g, limit)
    inside = b.contains(all_vertices(g.group, g.n))
    restricted = adjacency[np.ix_(inside, inside)].astype(object)
    paths = np.ones(int(inside.sum()), dtype=object)
    for _ in range(t):
        paths = paths.dot(restricted)
    return Fraction(int(paths.sum()), g.vertex_count * g.degree ** t)


def _count_confined(g: CayleyGraph, b: VertexSet, t: int, size: int, child: np.random.SeedSequence) -> int:
    rng = np.random.default_rng(child)
    states = rng.integers(0, g.group.order, size=(size, g.n))
    alive = b.contains(states)
    for _ in range(t):
        states = g.group.mul_array[states, g.space.take(rng.integers(0, g.degree, size=size))]
        alive &= b.contains(states)
    return int(alive.sum())


def monte_carlo_confinement(g: CayleyGraph, b: VertexSet, t: int, trials: int, seed: int,
                            jobs: int = 1) -> int:
    """Number of confined walks out of `trials`; batch k always uses the k-th spawned seed."""
    children = np.random.SeedSequence(seed).spawn(math.ceil(trials / WALK_BATCH))
    sizes = [min(WALK_BATCH, trials - k * WALK_BATCH) for k in range(len(children))]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(lambda args: _count_confined(g, b, t, *args), zip(sizes, children)))
    else:
        counts = [_count_confined(g, b, t, size, child) for size, child in zip(sizes, children)]
    return sum(counts)


def confinement_probability(g: CayleyGraph, b: VertexSet, t: int, trials: int = 100_000, seed: int = 0,
                            method: ConfinementMethod = ConfinementMethod.AUTO,
                            alpha: Optional[float] = None, confidence: float = 0.99,
                            jobs: int = 1) -> ConfinementReport:
    if t < 0:
        raise InvalidParameter("walk length must be non-negative")
    if alpha is None:
        alpha = second_eigenvalue(g).lambda_value
    beta = b.size / g.vertex_count
    bound = (beta + alpha) ** t
    if method == ConfinementMethod.AUTO:
        method = ConfinementMethod.EXACT if g.vertex_count <= DEFAULT_CONFIG.exact_chain_limit \
            else ConfinementMethod.MONTE_CARLO

    if method == ConfinementMethod.EXACT:
        exact = exact_confinement(g, b, t)
        value = float(exact)
        return ConfinementReport(method=method, t=t, estimate=value, exact=str(exact), beta=beta, alpha=alpha,
                                 confidence=confidence, reference_bound=bound,
                                 respects_bound=value <= bound + 1e-12)

    hits = monte_carlo_confinement(g, b, t, trials, seed, jobs)
    low, high = wilson_interval(hits, trials, confidence)
    logger.info(f"confinement: {hits}/{trials} walks stayed inside, bound {bound:.4g}")
    return ConfinementReport(method=method, t=t, trials=trials, estimate=hits / trials, wilson_low=low,
                             wilson_high=high, confidence=confidence, beta=beta, alpha=alpha,
                             reference_bound=bound, respects_bound=low <= bound + 1e-12)


# Subgroup counting and parameters

def subgroup_fraction(s: BiasedSpace, h: Subgroup) -> Fraction:
    """|S n H| / |S| counted with repetitions."""
    if s.group != h.group or s.n != h.ambient_n:
        raise GroupMismatch("space and subgroup live in different ambient groups")
    inside = sum(int(member_mask(h, rows).sum()) for rows in s.chunks())
    return Fraction(inside, s.size)


def walk_parameter_t(n: int, d_exponent: Union[int, Fraction], group: GroupSpec) -> int:
    """ceil(2n / (d log_|G| n - 2))."""
    exact = exact_log(n, group.order)
    d = Fraction(d_exponent)
    if exact is not None:
        denom = d * exact - 2
        if denom <= 0:
            raise InvalidParameter(f"d log n = {d * exact} must exceed 2")
        return math.ceil(Fraction(2 * n) / denom)
    denom = float(d) * math.log(n) / math.log(group.order) - 2
    if denom <= 0:
        raise InvalidParameter(f"d log n = {denom + 2:.6g} must exceed 2")
    return math.ceil(2 * n / denom)


def hitting_bound(member_orders: Sequence[int], vertex_count: int, epsilon: float) -> float:
    """Upper bound on the fraction of an eps-biased S inside some member: sum |H_A| / N + m eps."""
    return float(Fraction(sum(member_orders), vertex_count)) + len(member_orders) * epsilon


if __name__ == "__main__":
    from smallbias import construct_for_group

    space = construct_for_group(GroupSpec.abelian([3]), 2, Fraction(1, 2))
    graph = CayleyGraph(space=space)
    print(lambda_by_characters(graph).to_json(), lambda_numeric(graph).to_json())
