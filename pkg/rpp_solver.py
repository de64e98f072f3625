"""
Remote Point Problem Solver

Given H <= G^n by generators and a radius r, find x in G^n whose Hamming
distance to every element of H is larger than r.

Key Features:
- Cover families H_A = H * G^n(union of blocks in A) whose union contains B(H, r)
- Hitting: scan a small-bias space for the first point outside every H_A
- Greedy: conditional expectations with an exact rational estimator built
  from prefix-coset counts on the stabiliser chain
- Block reduction for subgroups of dimension k well below n/2
- Certificates that are re-checked independently by verify_solution
"""

import itertools
import logging
import math
from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from cayley_spectral import hitting_bound
from group_core import coordinate_generators, distance_to_subgroup, project
from group_schema import (
    DEFAULT_CONFIG, Coords, EstimatorStuck, GroupKind, GroupMismatch, GroupSpec, NoHit, RegimeViolation,
    Subgroup, TupleElement, VerificationFailed,
)
from perm_engine import coset_prefix_count, member_mask, subgroup_member, subgroup_order
from smallbias import BiasedSpace, construct_for_group

logger = logging.getLogger(__name__)

SCAN_ROWS = 4096


class SolveMode(str, Enum):
    ABELIAN_HITTING = "abelian_hitting"
    GENERAL_GREEDY = "general_greedy"
    AUTO = "auto"


class SolverAlgorithm(str, Enum):
    HALF_DIM = "half_dim"
    GENERAL_K = "general_k"


class CoverStrategy(str, Enum):
    RADIUS = "radius"
    LOGARITHMIC = "logarithmic"


# Cover families

class CoverParams(BaseModel):
    """Block partition shape: ell blocks of at most block_size coordinates, unions of a_size blocks."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    c: float = Field(default=1.0, gt=0)
    ell: int = Field(ge=1)
    block_size: int = Field(ge=1)
    a_size: int = Field(ge=0)
    m_bound: Optional[int] = None

    @model_validator(mode="after")
    def validate_shape(self) -> "CoverParams":
        if self.ell > self.n:
            raise ValueError(f"ell = {self.ell} blocks cannot partition {self.n} coordinates")
        if self.ell * self.block_size < self.n:
            raise ValueError(f"ell * block_size = {self.ell * self.block_size} is below n = {self.n}")
        if self.a_size > self.ell:
            raise ValueError(f"a_size = {self.a_size} exceeds ell = {self.ell}")
        return self

    @classmethod
    def logarithmic(cls, n: int, c: float = 1.0) -> "CoverParams":
        """ell = ceil(10c log n), block = ceil(n / ell), a_size = ceil(c log n)."""
        log_n = math.log2(n) if n > 1 else 0.0
        ell = min(n, max(1, math.ceil(10 * c * log_n)))
        return cls(
            n=n, c=c, ell=ell, block_size=math.ceil(n / ell),
            a_size=min(ell, math.ceil(c * log_n)),
            m_bound=math.ceil(n ** (10 * c)),
        )

    @classmethod
    def for_radius(cls, n: int, r: int, c: float = 1.0) -> "CoverParams":
        """Singleton blocks with a_size = r; the union of the members is exactly B(H, r)."""
        return cls(n=n, c=c, ell=n, block_size=1, a_size=min(r, n))

    def covers(self, r: int) -> bool:
        return self.a_size >= min(r, self.ell)

    def blocks(self) -> List[Tuple[int, ...]]:
        """Consecutive ranges, sizes differing by at most one."""
        q, extra = divmod(self.n, self.ell)
        out, start = [], 0
        for j in range(self.ell):
            size = q + (1 if j < extra else 0)
            out.append(tuple(range(start, start + size)))
            start += size
        return out


class CoverMember(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: Tuple[int, ...]
    coords: Tuple[int, ...]
    subgroup: Subgroup

    @property
    def order(self) -> int:
        return subgroup_order(self.subgroup)

    def to_json(self) -> Dict[str, Any]:
        return {"a": list(self.a), "coords": list(self.coords), "generators": self.subgroup.to_json()["generators"]}


class CoverSummary(BaseModel):
    params: CoverParams
    r: int
    width: int
    member_count: int
    phi0: str


class CoverFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: CoverParams
    r: int
    width: int
    subgroup: Subgroup
    blocks: Tuple[Tuple[int, ...], ...]
    members: Tuple[CoverMember, ...]

    @model_validator(mode="after")
    def validate_blocks(self) -> "CoverFamily":
        flat = [i for block in self.blocks for i in block]
        if flat != list(range(self.subgroup.ambient_n)):
            raise ValueError("cover blocks must be consecutive ranges partitioning [n]")
        return self

    @property
    def vertex_count(self) -> int:
        return self.subgroup.group.order ** self.subgroup.ambient_n

    def member_orders(self) -> List[int]:
        return [m.order for m in self.members]

    def phi0(self) -> Fraction:
        return Fraction(sum(self.member_orders()), self.vertex_count)

    def summary(self) -> CoverSummary:
        return CoverSummary(params=self.params, r=self.r, width=self.width,
                            member_count=len(self.members), phi0=str(self.phi0()))

    def to_json(self) -> Dict[str, Any]:
        data = self.summary().model_dump(mode="json")
        data["blocks"] = [list(b) for b in self.blocks]
        data["members"] = [m.to_json() for m in self.members]
        return data


def _require_half_dim(h: Subgroup) -> None:
    order = subgroup_order(h)
    if order * order > h.group.order ** h.ambient_n:
        raise RegimeViolation(f"|H| = {order} exceeds |G|^(n/2)", order=order, n=h.ambient_n)


def build_cover(h: Subgroup, r: int, params: CoverParams) -> CoverFamily:
    _require_half_dim(h)
    if r < 0:
        raise RegimeViolation(f"radius must be non-negative, got {r}")
    if params.n != h.ambient_n:
        raise GroupMismatch(f"cover parameters for n={params.n}, subgroup has n={h.ambient_n}")
    if not params.covers(r):
        raise RegimeViolation(
            f"a_size = {params.a_size} blocks cannot hold every support of size {r}",
            a_size=params.a_size, ell=params.ell, r=r,
        )
    width = params.a_size
    blocks = params.blocks()
    members = []
    for a in itertools.combinations(range(params.ell), width):
        coords = tuple(i for j in a for i in blocks[j])
        gens = h.generator_coords + coordinate_generators(h.group, h.ambient_n, coords)
        members.append(CoverMember(a=a, coords=coords, subgroup=Subgroup.from_coords(h.group, h.ambient_n, gens)))
    logger.info(f"cover: ell={params.ell} width={width} members={len(members)} for r={r}")
    return CoverFamily(params=params, r=r, width=width, subgroup=h, blocks=tuple(blocks), members=tuple(members))


# Hitting

class ScanResult(BaseModel):
    coords: Coords
    index: int


def scan_for_hit(cover: CoverFamily, s: BiasedSpace, rows: int = SCAN_ROWS) -> ScanResult:
    """First element of S, in construction order, outside every cover member."""
    if s.group != cover.subgroup.group or s.n != cover.subgroup.ambient_n:
        raise GroupMismatch("space and cover live in different ambient groups")
    offset = 0
    for chunk in s.chunks(rows):
        candidates = np.arange(len(chunk))
        for member in cover.members:
            candidates = candidates[~member_mask(member.subgroup, chunk[candidates])]
            if not len(candidates):
                break
        if len(candidates):
            first = int(candidates[0])
            return ScanResult(coords=tuple(int(v) for v in chunk[first]), index=offset + first)
        offset += len(chunk)
    raise NoHit(f"none of the {s.size} elements of S avoids the cover", scanned=s.size,
                members=len(cover.members))


def hit_with_space(cover: CoverFamily, s: BiasedSpace) -> TupleElement:
    found = scan_for_hit(cover, s)
    return TupleElement(group=s.group, coords=found.coords)


# Greedy conditional expectations

def estimator(cover: CoverFamily, prefix: Sequence[int]) -> Fraction:
    """Sum over members of |{x in H_A : x starts with prefix}| / |G|^(n - len(prefix))."""
    group, n = cover.subgroup.group, cover.subgroup.ambient_n
    count = sum(coset_prefix_count(m.subgroup, prefix) for m in cover.members)
    return Fraction(count, group.order ** (n - len(prefix)))


def greedy_trace(cover: CoverFamily) -> Tuple[Coords, List[Fraction]]:
    phi = estimator(cover, ())
    if phi >= 1:
        raise EstimatorStuck(f"initial estimator {phi} is not below 1", phi0=str(phi))
    group, n = cover.subgroup.group, cover.subgroup.ambient_n
    prefix: List[int] = []
    trace = [phi]
    for i in range(n):
        best, best_phi = None, None
        for a in range(group.order):
            value = estimator(cover, prefix + [a])
            if best_phi is None or value < best_phi:
                best, best_phi = a, value
        if best_phi > trace[-1]:
            raise EstimatorStuck(f"estimator rose from {trace[-1]} to {best_phi} at coordinate {i}")
        prefix.append(best)
        trace.append(best_phi)
        logger.debug(f"greedy: x_{i} = {best}, phi = {best_phi}")
    return tuple(prefix), trace


def greedy_conditional(cover: CoverFamily) -> TupleElement:
    coords, _ = greedy_trace(cover)
    return TupleElement(group=cover.subgroup.group, coords=coords)


# Instances and solutions

class RppInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    subgroup: Subgroup
    r: int = Field(ge=0)
    mode: SolveMode = SolveMode.AUTO

    @property
    def group(self) -> GroupSpec:
        return self.subgroup.group

    @property
    def n(self) -> int:
        return self.subgroup.ambient_n

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "RppInstance":
        group = GroupSpec.from_json(data["group"])
        return cls(subgroup=Subgroup.from_json(data, group), r=int(data.get("r", 0)),
                   mode=SolveMode(data.get("mode", SolveMode.AUTO.value)))

    def to_json(self) -> Dict[str, Any]:
        data = self.subgroup.to_json(include_group=True)
        data.update({"r": self.r, "mode": self.mode.value})
        return data


class HittingCertificate(BaseModel):
    kind: Literal["hitting"] = "hitting"
    cover: CoverSummary
    verdicts: List[bool]
    scanned: int
    alpha: str
    measured_bias: Optional[float] = None
    hitting_bound: Optional[float] = None
    provenance: List[str] = []

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class GreedyCertificate(BaseModel):
    kind: Literal["greedy"] = "greedy"
    cover: CoverSummary
    trace: List[str]

    @model_validator(mode="after")
    def validate_trace(self) -> "GreedyCertificate":
        values = [Fraction(v) for v in self.trace]
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("estimator trace must be non-increasing")
        if values and values[-1] >= 1:
            raise ValueError(f"final estimator {values[-1]} is not below 1")
        return self

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class BlocksCertificate(BaseModel):
    kind: Literal["blocks"] = "blocks"
    partition: List[List[int]]
    k: int
    r_block: int
    solutions: List["RppSolution"]

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind, "partition": self.partition, "k": self.k, "r_block": self.r_block,
                "solutions": [s.to_json() for s in self.solutions]}


Certificate = Annotated[Union[HittingCertificate, GreedyCertificate, BlocksCertificate], Field(discriminator="kind")]


class RppSolution(BaseModel):
    x: TupleElement
    algorithm: SolverAlgorithm
    mode: SolveMode
    r: int
    certificate: Certificate
    verified_distance: Optional[int] = None

    @model_validator(mode="after")
    def validate_certificate(self) -> "RppSolution":
        expected = {SolveMode.ABELIAN_HITTING: "hitting", SolveMode.GENERAL_GREEDY: "greedy"}
        if self.algorithm == SolverAlgorithm.GENERAL_K:
            if self.certificate.kind != "blocks":
                raise ValueError("block reduction solutions carry a blocks certificate")
        elif self.certificate.kind != expected.get(self.mode):
            raise ValueError(f"a {self.mode.value} solution cannot carry a {self.certificate.kind} certificate")
        return self

    def to_json(self) -> Dict[str, Any]:
        return {
            "x": self.x.to_json(),
            "algorithm": self.algorithm.value,
            "mode": self.mode.value,
            "r": self.r,
            "verified_distance": self.verified_distance,
            "certificate": self.certificate.to_json(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any], group: GroupSpec) -> "RppSolution":
        cert = dict(data["certificate"])
        if cert.get("kind") == "blocks":
            cert["solutions"] = [cls.from_json(s, group) for s in cert.get("solutions", [])]
        return cls(
            x=TupleElement(group=group, coords=tuple(data["x"])),
            algorithm=SolverAlgorithm(data["algorithm"]),
            mode=SolveMode(data["mode"]),
            r=int(data["r"]),
            certificate=cert,
            verified_distance=data.get("verified_distance"),
        )


BlocksCertificate.model_rebuild()
RppSolution.model_rebuild()


# Solvers

def _cover_params(inst: RppInstance, c: float, strategy: CoverStrategy) -> CoverParams:
    if strategy == CoverStrategy.RADIUS:
        return CoverParams.for_radius(inst.n, inst.r, c)
    limit = math.ceil(c * math.log2(inst.n)) if inst.n > 1 else 0
    if inst.r > limit:
        raise RegimeViolation(f"r = {inst.r} exceeds ceil(c log n) = {limit}", r=inst.r, c=c, n=inst.n)
    return CoverParams.logarithmic(inst.n, c)


def _resolve_mode(inst: RppInstance, cover: CoverFamily, has_space: bool) -> SolveMode:
    if inst.mode != SolveMode.AUTO:
        return inst.mode
    if cover.phi0() < 1:
        return SolveMode.GENERAL_GREEDY
    if inst.group.kind == GroupKind.ABELIAN or has_space:
        return SolveMode.ABELIAN_HITTING
    raise EstimatorStuck(f"initial estimator {cover.phi0()} is not below 1 and G has no abelian presentation",
                         phi0=str(cover.phi0()))


def hitting_epsilon(cover: CoverFamily, alpha: Optional[Union[float, Fraction]] = None) -> Fraction:
    """min(1 / (2m), alpha) for a cover of m members."""
    epsilon = Fraction(1, 2 * len(cover.members))
    if alpha is not None:
        epsilon = min(epsilon, Fraction(alpha).limit_denominator(10 ** 12))
    return epsilon


def solve_half_dim(inst: RppInstance, c: float = 1.0, strategy: CoverStrategy = CoverStrategy.RADIUS,
                   params: Optional[CoverParams] = None, space: Optional[BiasedSpace] = None,
                   alpha: Optional[Union[float, Fraction]] = None,
                   sweep_limit: Optional[int] = None) -> RppSolution:
    h = inst.subgroup
    _require_half_dim(h)
    cover = build_cover(h, inst.r, params or _cover_params(inst, c, strategy))
    mode = _resolve_mode(inst, cover, space is not None)

    if mode == SolveMode.GENERAL_GREEDY:
        coords, trace = greedy_trace(cover)
        certificate = GreedyCertificate(cover=cover.summary(), trace=[str(v) for v in trace])
    else:
        epsilon = hitting_epsilon(cover, alpha)
        if space is None:
            if inst.group.kind != GroupKind.ABELIAN:
                raise RegimeViolation("hitting without an explicit space needs an abelian group")
            space = construct_for_group(inst.group, inst.n, epsilon, sweep_limit)
        found = scan_for_hit(cover, space)
        coords = found.coords
        bound = None
        if space.measured_bias is not None:
            bound = hitting_bound(cover.member_orders(), cover.vertex_count, space.measured_bias)
        verdicts = [subgroup_member(member.subgroup, coords) for member in cover.members]
        certificate = HittingCertificate(
            cover=cover.summary(), verdicts=verdicts, scanned=found.index + 1,
            alpha=str(epsilon), measured_bias=space.measured_bias, hitting_bound=bound,
            provenance=list(space.provenance),
        )
    logger.info(f"half_dim: {mode.value} found x = {list(coords)}")
    return RppSolution(x=TupleElement(group=inst.group, coords=coords), algorithm=SolverAlgorithm.HALF_DIM,
                       mode=mode, r=inst.r, certificate=certificate)


def dimension_ceiling(h: Subgroup) -> int:
    """Smallest k with |G|^k >= |H|."""
    order, base = subgroup_order(h), h.group.order
    k = 0
    while base ** k < order:
        k += 1
    return k


def block_partition(n: int, k: int) -> List[Tuple[int, ...]]:
    """Consecutive blocks of size 2k; the last block absorbs the remainder and stays below 4k."""
    count = n // (2 * k)
    if count < 1:
        raise RegimeViolation(f"n = {n} is too small for blocks of size {2 * k}", n=n, k=k)
    blocks = [tuple(range(2 * k * j, 2 * k * (j + 1))) for j in range(count - 1)]
    blocks.append(tuple(range(2 * k * (count - 1), n)))
    return blocks


def block_radius(k: int, c: float) -> int:
    return max(1, math.ceil(4 * c * math.log2(k))) if k > 1 else 1


def _block_instance(inst: RppInstance, block: Sequence[int], r_block: int) -> RppInstance:
    return RppInstance(subgroup=project(inst.subgroup, block), r=r_block - 1, mode=inst.mode)


def solve_general_k(inst: RppInstance, c: float = 1.0,
                    strategy: CoverStrategy = CoverStrategy.RADIUS,
                    sweep_limit: Optional[int] = None) -> RppSolution:
    h = inst.subgroup
    _require_half_dim(h)
    k = max(1, dimension_ceiling(h))
    blocks = block_partition(inst.n, k)
    r_block = block_radius(k, c)
    guaranteed = len(blocks) * r_block
    if inst.r >= guaranteed:
        raise RegimeViolation(f"r = {inst.r} is not below the guaranteed distance {guaranteed}",
                              r=inst.r, blocks=len(blocks), r_block=r_block)
    logger.info(f"general_k: k={k} blocks={[len(b) for b in blocks]} r_block={r_block}")

    solutions = [solve_half_dim(_block_instance(inst, block, r_block), c, strategy, sweep_limit=sweep_limit)
                 for block in blocks]
    coords = tuple(v for s in solutions for v in s.x.coords)
    certificate = BlocksCertificate(partition=[list(b) for b in blocks], k=k, r_block=r_block, solutions=solutions)
    return RppSolution(x=TupleElement(group=inst.group, coords=coords), algorithm=SolverAlgorithm.GENERAL_K,
                       mode=inst.mode, r=inst.r, certificate=certificate)


# Verification

class VerificationReport(BaseModel):
    ok: bool = True
    checks: List[str] = []
    distance: Optional[int] = None
    distance_checked: bool = False


def _fail(message: str, **detail: Any) -> None:
    raise VerificationFailed(message, **detail)


def _check_cover_certificate(inst: RppInstance, x: Coords, cert: Union[HittingCertificate, GreedyCertificate],
                             checks: List[str]) -> None:
    if cert.cover.r < inst.r:
        _fail(f"cover radius {cert.cover.r} is below r = {inst.r}")
    cover = build_cover(inst.subgroup, cert.cover.r, cert.cover.params)
    if len(cover.members) != cert.cover.member_count:
        _fail(f"certificate lists {cert.cover.member_count} members, cover has {len(cover.members)}")
    verdicts = [subgroup_member(member.subgroup, x) for member in cover.members]
    for member, inside in zip(cover.members, verdicts):
        if inside:
            _fail(f"x lies in cover member A = {list(member.a)}", a=list(member.a))
    checks.append(f"x avoids all {len(cover.members)} cover members")

    if isinstance(cert, HittingCertificate):
        if cert.verdicts != verdicts:
            _fail("hitting verdicts do not match the cover")
        checks.append("per-member verdicts recomputed")
        return

    trace = [Fraction(v) for v in cert.trace]
    if len(trace) != inst.n + 1:
        _fail(f"estimator trace has {len(trace)} entries, expected {inst.n + 1}")
    for i, value in enumerate(trace):
        if estimator(cover, x[:i]) != value:
            _fail(f"estimator at step {i} is {estimator(cover, x[:i])}, certificate says {value}", step=i)
        if i and value > trace[i - 1]:
            _fail(f"estimator increased at step {i}", step=i)
    if trace[-1] != 0:
        _fail(f"final count {trace[-1]} is not zero")
    checks.append("estimator trace recomputed, non-increasing, final count 0")


def _check_certificate(inst: RppInstance, sol: RppSolution, checks: List[str]) -> None:
    x = sol.x.coords
    if sol.x.group != inst.group or len(x) != inst.n:
        _fail("solution does not live in G^n of the instance")
    cert = sol.certificate
    if not isinstance(cert, BlocksCertificate):
        _check_cover_certificate(inst, x, cert, checks)
        return

    flat = [i for block in cert.partition for i in block]
    if flat != list(range(inst.n)):
        _fail("block partition is not a consecutive partition of [n]")
    if inst.r >= len(cert.partition) * cert.r_block:
        _fail(f"r = {inst.r} is not below {len(cert.partition)} blocks * r_block {cert.r_block}")
    if len(cert.solutions) != len(cert.partition):
        _fail("one block solution per block is required")
    for block, nested in zip(cert.partition, cert.solutions):
        if tuple(x[i] for i in block) != nested.x.coords:
            _fail(f"x restricted to block {block[0]}..{block[-1]} differs from the block solution")
        _check_certificate(_block_instance(inst, block, cert.r_block), nested, checks)
    checks.append(f"{len(cert.partition)} block certificates verified")


def verify_solution(inst: RppInstance, sol: RppSolution, cap: Optional[int] = None) -> VerificationReport:
    cap = DEFAULT_CONFIG.enumeration_cap if cap is None else cap
    checks: List[str] = []
    _check_certificate(inst, sol, checks)
    report = VerificationReport(checks=checks)
    if subgroup_order(inst.subgroup) <= cap:
        distance = distance_to_subgroup(sol.x, inst.subgroup, cap)
        if distance <= inst.r:
            _fail(f"distance {distance} is not above r = {inst.r}", distance=distance, r=inst.r)
        checks.append(f"distance {distance} > {inst.r}")
        report = VerificationReport(checks=checks, distance=distance, distance_checked=True)
    return report


def solve(inst: RppInstance, algorithm: SolverAlgorithm = SolverAlgorithm.GENERAL_K, c: float = 1.0,
          strategy: CoverStrategy = CoverStrategy.RADIUS, cap: Optional[int] = None,
          sweep_limit: Optional[int] = None) -> RppSolution:
    """Run a solver, verify its certificate and attach the oracle distance when H is enumerable."""
    if algorithm == SolverAlgorithm.HALF_DIM:
        sol = solve_half_dim(inst, c, strategy, sweep_limit=sweep_limit)
    else:
        sol = solve_general_k(inst, c, strategy, sweep_limit=sweep_limit)
    report = verify_solution(inst, sol, cap)
    return sol.model_copy(update={"verified_distance": report.distance})


if __name__ == "__main__":
    from group_schema import create_diagonal_instance

    instance = RppInstance(subgroup=create_diagonal_instance(4), r=1)
    print(solve(instance).to_json())
