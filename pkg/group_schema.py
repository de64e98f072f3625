"""
Group Schema Definition

Pydantic records for the objects every other module passes around: a fixed
finite group, elements of its n-fold product, subgroups given by generators,
and the run configuration shared by the library and the CLI.

Key Features:
- Abelian groups from invariant factors d1 | d2 | ... | dk, nonabelian groups
  from an explicit multiplication table, both validated on load
- Dense element indices; abelian indices use mixed radix over the invariant
  factors with the first factor least significant
- JSON round-trips in the interchange formats ({"abelian": [...]},
  {"table": [[...]], "inverse": [...]}, {"n": 4, "generators": [[...]]})
- A single error hierarchy with machine-readable codes
- Environment-aware configuration for enumeration and sweep caps
"""

import itertools
import os
import threading
from enum import Enum
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

Coords = Tuple[int, ...]
T = TypeVar("T")

MAX_GROUP_ORDER = 256


# Error types

class RppError(ValueError):
    """Base class for every domain error raised by the library."""

    def __init__(self, message: str, **detail: Any):
        super().__init__(message)
        self.detail = detail

    @property
    def code(self) -> str:
        name = type(self).__name__
        return "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")

    def to_json(self) -> Dict[str, Any]:
        return {"error": self.code, "detail": {"message": str(self), **self.detail}}


class GroupMismatch(RppError):
    pass


class InvalidParameter(RppError):
    pass


class CapExceeded(RppError):
    pass


class TooLarge(RppError):
    pass


class TooLargeToVerify(RppError):
    pass


class BiasTooHigh(RppError):
    pass


class RegimeViolation(RppError):
    pass


class NoHit(RppError):
    pass


class EstimatorStuck(RppError):
    pass


class VerificationFailed(RppError):
    pass


class GroupKind(str, Enum):
    ABELIAN = "abelian"
    TABLE = "table"


class GroupSpec(BaseModel):
    """A fixed finite group with 2 <= |G| <= 256."""

    model_config = ConfigDict(frozen=True)

    kind: GroupKind
    invariant_factors: Optional[Tuple[int, ...]] = None
    mul_table: Optional[Tuple[Tuple[int, ...], ...]] = None
    inverse_table: Optional[Tuple[int, ...]] = None
    identity_index: int = 0

    _mul: Tuple[Tuple[int, ...], ...] = PrivateAttr()
    _inv: Tuple[int, ...] = PrivateAttr()
    _digits: Optional[Tuple[Tuple[int, ...], ...]] = PrivateAttr(default=None)
    _mul_array: np.ndarray = PrivateAttr()
    _inv_array: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def validate_group(self) -> "GroupSpec":
        if self.kind == GroupKind.ABELIAN:
            factors = self.invariant_factors
            if not factors:
                raise ValueError("abelian group needs at least one invariant factor")
            if any(d < 1 for d in factors):
                raise ValueError(f"invariant factors must be positive, got {list(factors)}")
            for d, e in zip(factors, factors[1:]):
                if e % d:
                    raise ValueError(f"invariant factors must form a divisor chain, {d} does not divide {e}")
            order = int(np.prod(factors))
            if order < 2:
                raise ValueError("group order must be at least 2")
            if order > MAX_GROUP_ORDER:
                raise ValueError(f"group order {order} exceeds {MAX_GROUP_ORDER}")
            if self.identity_index != 0:
                raise ValueError("abelian groups use index 0 for the identity")
        else:
            if self.mul_table is None:
                raise ValueError("table group needs a multiplication table")
            order = len(self.mul_table)
            if order < 2 or order > MAX_GROUP_ORDER:
                raise ValueError(f"table order {order} outside [2, {MAX_GROUP_ORDER}]")
            if any(len(row) != order for row in self.mul_table):
                raise ValueError("multiplication table must be square")
            if any(not 0 <= v < order for row in self.mul_table for v in row):
                raise ValueError("multiplication table entries out of range (closure fails)")
            if not 0 <= self.identity_index < order:
                raise ValueError(f"identity index {self.identity_index} out of range")
            if self.inverse_table is not None and len(self.inverse_table) != order:
                raise ValueError("inverse table length does not match the group order")
        return self

    def model_post_init(self, __context: Any) -> None:
        if self.kind == GroupKind.ABELIAN:
            digits = tuple(_mixed_radix_digits(self.invariant_factors))
            index = {d: i for i, d in enumerate(digits)}
            factors = self.invariant_factors
            mul = tuple(
                tuple(index[tuple((x + y) % d for x, y, d in zip(a, b, factors))] for b in digits)
                for a in digits
            )
            inv = tuple(index[tuple((-x) % d for x, d in zip(a, factors))] for a in digits)
            self._digits = digits
        else:
            mul = self.mul_table
            e = self.identity_index
            if self.inverse_table is not None:
                inv = self.inverse_table
            else:
                inv = tuple(next((b for b in range(len(mul)) if mul[a][b] == e), -1) for a in range(len(mul)))
            _check_table_axioms(mul, inv, e)
        self._mul = mul
        self._inv = inv
        self._mul_array = np.asarray(mul, dtype=np.int64)
        self._inv_array = np.asarray(inv, dtype=np.int64)

    # private numpy caches stay out of equality
    def _key(self) -> Tuple[Any, ...]:
        return (self.kind, self.invariant_factors, self._mul, self.identity_index)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupSpec):
            return NotImplemented
        return self is other or self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    # Construction helpers

    @classmethod
    def abelian(cls, factors: List[int]) -> "GroupSpec":
        return cls(kind=GroupKind.ABELIAN, invariant_factors=tuple(factors))

    @classmethod
    def from_table(cls, table: List[List[int]], inverse: Optional[List[int]] = None,
                   identity_index: Optional[int] = None) -> "GroupSpec":
        if identity_index is None:
            identity_index = _find_identity(table)
        return cls(kind=GroupKind.TABLE, mul_table=tuple(map(tuple, table)),
                   inverse_table=tuple(inverse) if inverse is not None else None,
                   identity_index=identity_index)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "GroupSpec":
        if "abelian" in data:
            return cls.abelian(list(data["abelian"]))
        if "table" in data:
            return cls.from_table(data["table"], data.get("inverse"), data.get("identity"))
        if "symmetric" in data:
            return symmetric_group(int(data["symmetric"]))
        raise ValueError(f"unrecognized group spec keys: {sorted(data)}")

    def to_json(self) -> Dict[str, Any]:
        if self.kind == GroupKind.ABELIAN:
            return {"abelian": list(self.invariant_factors)}
        data: Dict[str, Any] = {"table": [list(row) for row in self._mul], "inverse": list(self._inv)}
        if self.identity_index:
            data["identity"] = self.identity_index
        return data

    # Arithmetic on element indices

    @property
    def order(self) -> int:
        return len(self._mul)

    @property
    def identity(self) -> int:
        return self.identity_index

    @property
    def table(self) -> Tuple[Tuple[int, ...], ...]:
        return self._mul

    @property
    def inverses(self) -> Tuple[int, ...]:
        return self._inv

    @property
    def mul_array(self) -> np.ndarray:
        return self._mul_array

    @property
    def inv_array(self) -> np.ndarray:
        return self._inv_array

    @property
    def is_abelian(self) -> bool:
        if self.kind == GroupKind.ABELIAN:
            return True
        return bool((self._mul_array == self._mul_array.T).all())

    def mul(self, a: int, b: int) -> int:
        return self._mul[a][b]

    def inv(self, a: int) -> int:
        return self._inv[a]

    def digits(self, a: int) -> Tuple[int, ...]:
        """Invariant-factor coordinates of an element (abelian kind only)."""
        if self._digits is None:
            raise GroupMismatch("digits are only defined for abelian groups", kind=self.kind.value)
        return self._digits[a]

    def from_digits(self, digits: Tuple[int, ...]) -> int:
        if self.kind != GroupKind.ABELIAN:
            raise GroupMismatch("digits are only defined for abelian groups", kind=self.kind.value)
        index, scale = 0, 1
        for value, d in zip(digits, self.invariant_factors):
            index += (value % d) * scale
            scale *= d
        return index

    def digit_array(self) -> np.ndarray:
        """|G| x k array of invariant-factor coordinates, row i for element i."""
        return np.asarray(self._digits if self._digits is not None else [], dtype=np.int64)

    def element_generators(self) -> List[int]:
        """A small generating set of G (unit digits, or a greedy closure for tables)."""
        if self.kind == GroupKind.ABELIAN:
            gens = []
            for j, d in enumerate(self.invariant_factors):
                if d > 1:
                    unit = [0] * len(self.invariant_factors)
                    unit[j] = 1
                    gens.append(self.from_digits(tuple(unit)))
            return gens
        return _greedy_generators(self._mul, self.identity_index)

    def label(self) -> str:
        if self.kind == GroupKind.ABELIAN:
            return "+".join(f"Z{d}" for d in self.invariant_factors)
        return f"table[{self.order}]"


def _mixed_radix_digits(factors: Tuple[int, ...]):
    # first factor least significant
    for combo in itertools.product(*(range(d) for d in reversed(factors))):
        yield tuple(reversed(combo))


def _find_identity(table: List[List[int]]) -> int:
    order = len(table)
    for e in range(order):
        if list(table[e]) == list(range(order)) and all(table[a][e] == a for a in range(order)):
            return e
    raise ValueError("multiplication table has no identity element")


def _greedy_generators(mul: Tuple[Tuple[int, ...], ...], identity: int) -> List[int]:
    order = len(mul)
    gens: List[int] = []
    reached = {identity}
    for candidate in range(order):
        if candidate in reached:
            continue
        gens.append(candidate)
        frontier = list(reached)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = mul[a][g]
                    if b not in reached:
                        reached.add(b)
                        nxt.append(b)
            frontier = nxt
    return gens


def _check_table_axioms(mul, inv, e) -> None:
    order = len(mul)
    if any(mul[e][a] != a or mul[a][e] != a for a in range(order)):
        raise ValueError(f"element {e} is not a two-sided identity")
    for a in range(order):
        if not 0 <= inv[a] < order or mul[a][inv[a]] != e or mul[inv[a]][a] != e:
            raise ValueError(f"element {a} has no valid inverse")
    # Light's test: associativity against a generating set suffices
    for g in _greedy_generators(mul, e):
        for a in range(order):
            row = mul[a]
            for b in range(order):
                if mul[row[b]][g] != row[mul[b][g]]:
                    raise ValueError(f"table is not associative at ({a}, {b}, {g})")


def symmetric_group(m: int) -> GroupSpec:
    """Sym(m) as a table group; permutations in lexicographic order, p*q applies p first."""
    perms = list(itertools.permutations(range(m)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(q[p[i]] for i in range(m))] for q in perms] for p in perms]
    return GroupSpec.from_table(table, identity_index=0)


class TupleElement(BaseModel):
    """An element x = (x1, ..., xn) of G^n."""

    model_config = ConfigDict(frozen=True)

    group: GroupSpec
    coords: Coords

    @model_validator(mode="after")
    def validate_coords(self) -> "TupleElement":
        if len(self.coords) < 1:
            raise ValueError("tuple elements need n >= 1")
        order = self.group.order
        for c in self.coords:
            if not 0 <= c < order:
                raise ValueError(f"coordinate {c} outside [0, {order})")
        return self

    @property
    def n(self) -> int:
        return len(self.coords)

    @classmethod
    def identity(cls, group: GroupSpec, n: int) -> "TupleElement":
        return cls(group=group, coords=(group.identity,) * n)

    def to_json(self) -> List[int]:
        return list(self.coords)


class Subgroup(BaseModel):
    """A subgroup of G^n given by generators, with lazily attached enumeration and BSGS data."""

    model_config = ConfigDict(frozen=True)

    group: GroupSpec
    ambient_n: int
    generators: Tuple[TupleElement, ...] = ()

    _cache: Dict[str, Any] = PrivateAttr(default_factory=dict)
    _lock: Any = PrivateAttr(default_factory=threading.RLock)

    @field_validator("ambient_n")
    @classmethod
    def validate_n(cls, v: int) -> int:
        if v < 1:
            raise ValueError("ambient n must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_generators(self) -> "Subgroup":
        for g in self.generators:
            if g.n != self.ambient_n:
                raise ValueError(f"generator {list(g.coords)} has length {g.n}, expected {self.ambient_n}")
            if g.group is not self.group and g.group != self.group:
                raise ValueError("generators must live in the subgroup's group")
        return self

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subgroup):
            return NotImplemented
        return (self.group, self.ambient_n, self.generator_coords) == (
            other.group, other.ambient_n, other.generator_coords)

    def __hash__(self) -> int:
        return hash((self.group, self.ambient_n, tuple(self.generator_coords)))

    @classmethod
    def from_coords(cls, group: GroupSpec, n: int, generators) -> "Subgroup":
        return cls(group=group, ambient_n=n,
                   generators=tuple(TupleElement(group=group, coords=tuple(g)) for g in generators))

    @classmethod
    def from_json(cls, data: Dict[str, Any], group: Optional[GroupSpec] = None) -> "Subgroup":
        if group is None:
            group = GroupSpec.from_json(data["group"])
        return cls.from_coords(group, int(data["n"]), data.get("generators", []))

    def to_json(self, include_group: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {"n": self.ambient_n, "generators": [list(g.coords) for g in self.generators]}
        if include_group:
            data["group"] = self.group.to_json()
        return data

    @property
    def generator_coords(self) -> List[Coords]:
        return [g.coords for g in self.generators]

    def cached(self, key: str, factory: Callable[[], T]) -> T:
        """Populate a cache slot once; concurrent callers wait for the single writer."""
        with self._lock:
            if key not in self._cache:
                self._cache[key] = factory()
            return self._cache[key]

    @property
    def cached_elements(self):
        return self._cache.get("elements")

    @property
    def cached_bsgs(self):
        return self._cache.get("bsgs")


class FeasibilityReport(BaseModel):
    n: int
    k_bound: float
    r: int
    slack_epsilon: float
    feasible: bool
    rhs_value: float


class DimensionReport(BaseModel):
    order: int
    delta: float
    exact_delta: Optional[str] = None
    relative: float
    exact_relative: Optional[str] = None


class RppConfiguration(BaseModel):
    enumeration_cap: int = 2 ** 20
    sweep_limit: int = 2 ** 24
    numeric_limit: int = 4096
    exact_chain_limit: int = 64
    materialize_limit: int = 2 ** 20
    logging_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"

    @classmethod
    def from_env(cls, **overrides: Any) -> "RppConfiguration":
        env = {
            "enumeration_cap": os.environ.get("RPP_ENUM_CAP"),
            "sweep_limit": os.environ.get("RPP_SWEEP_LIMIT"),
            "numeric_limit": os.environ.get("RPP_NUMERIC_LIMIT"),
            "exact_chain_limit": os.environ.get("RPP_EXACT_CHAIN_LIMIT"),
            "materialize_limit": os.environ.get("RPP_MATERIALIZE_LIMIT"),
            "logging_level": os.environ.get("RPP_LOG_LEVEL"),
        }
        values = {k: v for k, v in env.items() if v is not None}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


DEFAULT_CONFIG = RppConfiguration.from_env()


# Example instances used by the CLI help text and the tests

def create_diagonal_instance(n: int = 4) -> Subgroup:
    """The repetition subgroup <(1,...,1)> of Z2^n."""
    group = GroupSpec.abelian([2])
    return Subgroup.from_coords(group, n, [(1,) * n])


def create_s3_diagonal_instance(n: int = 4) -> Subgroup:
    """The diagonal {(g,...,g) : g in S3} inside S3^n."""
    group = symmetric_group(3)
    return Subgroup.from_coords(group, n, [(g,) * n for g in group.element_generators()])


if __name__ == "__main__":
    import json

    h = create_diagonal_instance()
    print(json.dumps(h.to_json(include_group=True), indent=2))
