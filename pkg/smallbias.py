"""
Small-Bias Spaces

Construction and exact measurement of epsilon-biased multisets in G^n for
abelian G = Z_d1 + ... + Z_dk.

Key Features:
- Exhaustive character sweep as one multidimensional FFT of the multiset's
  histogram, streamed chunk by chunk so q^2-sized spaces never sit in memory
- Powering construction {(y x^i)_i : x, y in F} over a prime field, over an
  extension field F_{p^t} read through the trace, and a rounded variant for
  composite moduli whose bias is measured, never assumed
- Size-bounded dispatch for prime moduli: proven powering when a field of the
  right order fits, otherwise the first measured candidate meeting eps
- Quotient lift from Z_dk^k onto the invariant-factor group, symmetrisation
  S + S^-1, random spaces, and the per-coordinate (linear) bias convention
- A direct character-sum reference path using exactly rounded summation
"""

import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr

from group_core import code_weights
from group_schema import (
    DEFAULT_CONFIG, BiasTooHigh, GroupKind, GroupMismatch, GroupSpec, InvalidParameter, TooLarge,
    TooLargeToVerify,
)

logger = logging.getLogger(__name__)

Rational = Union[int, float, Fraction, str]

BIAS_TOLERANCE = 1e-9
CHUNK_ROWS = 1 << 16
HISTOGRAM_BUFFER = 1 << 22
SAMPLE_ATTEMPTS = 16


class ConstructionKind(str, Enum):
    PRIME_FIELD = "prime_field"
    EXTENSION_FIELD = "extension_field"
    ROUNDING = "rounding"
    QUOTIENT_LIFT = "quotient_lift"
    EXPLICIT = "explicit"
    RANDOM = "random"


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    f = 3
    while f * f <= q:
        if q % f == 0:
            return False
        f += 2
    return True


def next_prime(target: int) -> int:
    q = max(2, target)
    while not is_prime(q):
        q += 1
    return q


def as_fraction(value: Rational) -> Fraction:
    return Fraction(value) if not isinstance(value, float) else Fraction(value).limit_denominator(10 ** 12)


# Multiset sources

class SpaceSource(ABC):
    """An ordered multiset of rows in G^n that can be read by position."""

    group: GroupSpec
    n: int

    @property
    @abstractmethod
    def size(self) -> int:
        pass

    @abstractmethod
    def take(self, indices: np.ndarray) -> np.ndarray:
        pass

    def chunks(self, rows: int = CHUNK_ROWS) -> Iterator[np.ndarray]:
        for start in range(0, self.size, rows):
            yield self.take(np.arange(start, min(start + rows, self.size), dtype=np.int64))


class ExplicitSource(SpaceSource):
    def __init__(self, group: GroupSpec, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise InvalidParameter("a space needs at least one row of coordinates")
        if rows.min() < 0 or rows.max() >= group.order:
            raise InvalidParameter(f"space coordinates outside [0, {group.order})")
        self.group, self.n, self.rows = group, rows.shape[1], rows

    @property
    def size(self) -> int:
        return len(self.rows)

    def take(self, indices: np.ndarray) -> np.ndarray:
        return self.rows[indices]


class PowerSource(SpaceSource):
    """Rows (y x^i mod q)_{i<n} for (x, y) in Z_q^2, x-major; optionally rounded into Z_m."""

    def __init__(self, q: int, n: int, m: Optional[int] = None):
        self.q, self.n, self.m = q, n, m
        self.group = GroupSpec.abelian([m if m is not None else q])

    @property
    def size(self) -> int:
        return self.q * self.q

    def take(self, indices: np.ndarray) -> np.ndarray:
        q = self.q
        x, y = indices // q, indices % q
        powers = np.ones((len(indices), self.n), dtype=np.int64)
        for i in range(1, self.n):
            powers[:, i] = powers[:, i - 1] * x % q
        rows = y[:, None] * powers % q
        if self.m is not None:
            rows = rows * self.m // q
        return rows


class ExtensionFieldSource(SpaceSource):
    """Rows (Tr(y x^i))_{i<n} for (x, y) in F_{p^t}^2 with Tr onto F_p."""

    def __init__(self, p: int, t: int, n: int):
        self.p, self.t, self.n = p, t, n
        self.q = p ** t
        self.group = GroupSpec.abelian([p])
        self.modulus = irreducible_polynomial(p, t)
        elements = _field_digits(p, t)
        self._digits = elements
        powers = np.zeros((self.q, n, t), dtype=np.int64)
        current = np.zeros((self.q, t), dtype=np.int64)
        current[:, 0] = 1
        for i in range(n):
            powers[:, i] = current
            current = _gf_mul(current, elements, self.modulus, p)
        self._powers = powers
        basis_trace = [_trace_of_monomial(j, p, t, self.modulus) for j in range(2 * t - 1)]
        self._bilinear = np.array([[basis_trace[j + l] for l in range(t)] for j in range(t)], dtype=np.int64)

    @property
    def size(self) -> int:
        return self.q * self.q

    def take(self, indices: np.ndarray) -> np.ndarray:
        x, y = indices // self.q, indices % self.q
        left = self._digits[y] @ self._bilinear
        return np.einsum("ct,cnt->cn", left, self._powers[x]) % self.p


class LiftSource(SpaceSource):
    """Coordinatewise reduction Z_dk^k -> Z_d1 + ... + Z_dk."""

    def __init__(self, base: SpaceSource, group: GroupSpec, split: bool):
        self.base, self.group, self.split = base, group, split
        factors = np.asarray(group.invariant_factors, dtype=np.int64)
        self._factors = factors
        self._radix = np.concatenate([[1], np.cumprod(factors[:-1])]).astype(np.int64)
        k = len(factors)
        self.n = base.n // k if split else base.n
        if not split:
            self._lut = (base.group.digit_array() % factors) @ self._radix

    @property
    def size(self) -> int:
        return self.base.size

    def take(self, indices: np.ndarray) -> np.ndarray:
        rows = self.base.take(indices)
        if self.split:
            digits = rows.reshape(len(rows), self.n, len(self._factors))
            return (digits % self._factors) @ self._radix
        return self._lut[rows]


class SymmetrizedSource(SpaceSource):
    """S followed by S^-1, position by position."""

    def __init__(self, base: SpaceSource):
        self.base, self.group, self.n = base, base.group, base.n

    @property
    def size(self) -> int:
        return 2 * self.base.size

    def take(self, indices: np.ndarray) -> np.ndarray:
        half = self.base.size
        rows = self.base.take(indices % half)
        flip = indices >= half
        rows[flip] = self.group.inv_array[rows[flip]]
        return rows


# Finite field helpers

def _poly_mod(poly: List[int], modulus: List[int], p: int) -> List[int]:
    poly = [c % p for c in poly]
    deg = len(modulus) - 1
    while len(poly) > deg:
        lead = poly.pop()
        if lead:
            for j in range(deg):
                poly[len(poly) - deg + j] = (poly[len(poly) - deg + j] - lead * modulus[j]) % p
    return poly


def irreducible_polynomial(p: int, t: int) -> List[int]:
    """The lexicographically first monic irreducible polynomial of degree t over F_p (low degree first)."""
    if t == 1:
        return [0, 1]
    for tail in range(p ** t):
        coeffs = [(tail // p ** j) % p for j in range(t)] + [1]
        if coeffs[0] == 0:
            continue
        if not any(_divides(divisor, coeffs, p) for d in range(1, t // 2 + 1) for divisor in _monic(p, d)):
            return coeffs
    raise InvalidParameter(f"no irreducible polynomial of degree {t} over F_{p}")


def _monic(p: int, d: int):
    for tail in range(p ** d):
        yield [(tail // p ** j) % p for j in range(d)] + [1]


def _divides(divisor: List[int], poly: List[int], p: int) -> bool:
    return not any(_poly_mod(list(poly), divisor, p))


def _field_digits(p: int, t: int) -> np.ndarray:
    q = p ** t
    return (np.arange(q, dtype=np.int64)[:, None] // p ** np.arange(t, dtype=np.int64)[None, :]) % p


def _gf_mul(a: np.ndarray, b: np.ndarray, modulus: List[int], p: int) -> np.ndarray:
    t = len(modulus) - 1
    product = np.zeros((len(a), 2 * t - 1), dtype=np.int64)
    for j in range(t):
        product[:, j:j + t] += a[:, j:j + 1] * b
    for deg in range(2 * t - 2, t - 1, -1):
        lead = product[:, deg] % p
        product[:, deg - t:deg] -= lead[:, None] * np.asarray(modulus[:t], dtype=np.int64)[None, :]
        product[:, deg] = 0
    return product[:, :t] % p


def _trace_of_monomial(j: int, p: int, t: int, modulus: List[int]) -> int:
    """Tr(X^j) in F_p[X]/(f), summing the Frobenius orbit."""
    element = np.zeros((1, t), dtype=np.int64)
    residue = _poly_mod([0] * j + [1], modulus, p)
    element[0, :len(residue)] = residue
    total = np.zeros((1, t), dtype=np.int64)
    frob = element
    for _ in range(t):
        total = (total + frob) % p
        power = np.zeros((1, t), dtype=np.int64)
        power[0, 0] = 1
        for _ in range(p):
            power = _gf_mul(power, frob, modulus, p)
        frob = power
    if total[0, 1:].any():
        raise ArithmeticError("trace left the prime field")
    return int(total[0, 0])


# The space record

class BiasedSpace(BaseModel):
    """A multiset S in G^n with its provenance and measured bias."""

    model_config = ConfigDict(frozen=True)

    group: GroupSpec
    n: int
    construction: ConstructionKind
    target_epsilon: Optional[float] = None
    measured_bias: Optional[float] = None
    verified: bool = False
    symmetric: bool = False
    boundary: bool = False
    modulus: Optional[int] = None
    provenance: Tuple[str, ...] = ()

    _source: SpaceSource = PrivateAttr()

    @classmethod
    def from_source(cls, source: SpaceSource, **fields: Any) -> "BiasedSpace":
        fields.setdefault("group", source.group)
        fields.setdefault("n", source.n)
        space = cls(**fields)
        space._source = source
        return space

    @classmethod
    def from_rows(cls, group: GroupSpec, rows: Sequence[Sequence[int]],
                  construction: ConstructionKind = ConstructionKind.EXPLICIT, **fields: Any) -> "BiasedSpace":
        return cls.from_source(ExplicitSource(group, np.asarray(rows)), construction=construction, **fields)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "BiasedSpace":
        group = GroupSpec.from_json(data["group"])
        return cls.from_rows(
            group, data["space"],
            target_epsilon=data.get("target_epsilon"),
            symmetric=bool(data.get("symmetric", False)),
            provenance=tuple(data.get("provenance", ())),
        )

    def to_json(self, materialize_limit: Optional[int] = None, include_space: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "group": self.group.to_json(),
            "n": self.n,
            "size": self.size,
            "construction": self.construction.value,
            "target_epsilon": self.target_epsilon,
            "measured_bias": self.measured_bias,
            "verified": self.verified,
            "symmetric": self.symmetric,
            "boundary": self.boundary,
            "modulus": self.modulus,
            "provenance": list(self.provenance),
        }
        if include_space:
            data["space"] = self.materialize(materialize_limit).tolist()
        return data

    @property
    def source(self) -> SpaceSource:
        return self._source

    @property
    def size(self) -> int:
        return self._source.size

    def chunks(self, rows: int = CHUNK_ROWS) -> Iterator[np.ndarray]:
        return self._source.chunks(rows)

    def take(self, indices: np.ndarray) -> np.ndarray:
        return self._source.take(np.asarray(indices, dtype=np.int64))

    def materialize(self, limit: Optional[int] = None) -> np.ndarray:
        limit = DEFAULT_CONFIG.materialize_limit if limit is None else limit
        if self.size > limit:
            raise TooLarge(f"space of size {self.size} exceeds materialize limit {limit}", size=self.size)
        return self.take(np.arange(self.size))

    def with_measurement(self, bias: Optional[float], verified: bool) -> "BiasedSpace":
        return self.derive(self._source, measured_bias=bias, verified=verified)

    def derive(self, source: SpaceSource, **changes: Any) -> "BiasedSpace":
        fields = self.model_dump(exclude={"group", "n"})
        fields.update(changes)
        return BiasedSpace.from_source(source, **fields)


# Characters

class Character:
    """chi_a(x) = prod exp(2 pi i a_ij x_ij / d_j) over coordinates i and invariant factors j."""

    def __init__(self, group: GroupSpec, label: Sequence[Sequence[int]]):
        if group.kind != GroupKind.ABELIAN:
            raise GroupMismatch("characters are defined for abelian groups only")
        self.group = group
        self.label = np.asarray(label, dtype=np.int64)
        self.factors = np.asarray(group.invariant_factors, dtype=np.int64)
        if self.label.ndim != 2 or self.label.shape[1] != len(self.factors):
            raise GroupMismatch(f"character label must be n x {len(self.factors)}")

    @property
    def is_trivial(self) -> bool:
        return not (self.label % self.factors).any()

    def phases(self, rows: np.ndarray) -> np.ndarray:
        digits = self.group.digit_array()[np.asarray(rows, dtype=np.int64)]
        turns = (digits * self.label[None, :, :] / self.factors[None, None, :]).sum(axis=(1, 2))
        return turns % 1.0

    def evaluate(self, coords: Sequence[int]) -> complex:
        turn = float(self.phases(np.asarray([coords]))[0])
        return complex(math.cos(2 * math.pi * turn), math.sin(2 * math.pi * turn))


def character_sum(space: BiasedSpace, label: Sequence[Sequence[int]]) -> complex:
    """Average of chi_a over S with exactly rounded summation."""
    chi = Character(space.group, label)
    real: List[float] = []
    imag: List[float] = []
    for rows in space.chunks():
        angles = 2 * np.pi * chi.phases(rows)
        real.append(math.fsum(np.cos(angles)))
        imag.append(math.fsum(np.sin(angles)))
    return complex(math.fsum(real), math.fsum(imag)) / space.size


# Bias measurement

def _require_abelian(group: GroupSpec) -> None:
    if group.kind != GroupKind.ABELIAN:
        raise GroupMismatch("bias is measured over abelian groups given by invariant factors")


def _lattice(group: GroupSpec, n: int) -> Tuple[Tuple[int, ...], np.ndarray, np.ndarray]:
    factors = group.invariant_factors
    strides = np.ones(len(factors), dtype=np.int64)
    for j in range(len(factors) - 2, -1, -1):
        strides[j] = strides[j + 1] * factors[j + 1]
    contrib = group.digit_array() @ strides
    return tuple(factors) * n, contrib, code_weights(group.order, n)


def histogram(space: BiasedSpace, sweep_limit: Optional[int] = None) -> np.ndarray:
    """Multiplicities of S on the digit lattice (Z_d1 x ... x Z_dk)^n, C order."""
    _require_abelian(space.group)
    sweep_limit = DEFAULT_CONFIG.sweep_limit if sweep_limit is None else sweep_limit
    cells = space.group.order ** space.n
    if cells > sweep_limit:
        raise TooLarge(f"|G|^n = {cells} exceeds the sweep limit {sweep_limit}", cells=cells, limit=sweep_limit)
    shape, contrib, weights = _lattice(space.group, space.n)
    counts = np.zeros(cells, dtype=np.int64)
    buffer: List[np.ndarray] = []
    buffered = 0
    for rows in space.chunks():
        buffer.append(contrib[rows] @ weights)
        buffered += len(rows)
        if buffered >= HISTOGRAM_BUFFER:
            counts += np.bincount(np.concatenate(buffer), minlength=cells)
            buffer, buffered = [], 0
    if buffer:
        counts += np.bincount(np.concatenate(buffer), minlength=cells)
    return counts.reshape(shape)


def bias_spectrum(space: BiasedSpace, sweep_limit: Optional[int] = None) -> np.ndarray:
    """|avg_S chi_a| for every character a, indexed like the histogram; entry 0 is the trivial character."""
    spectrum = np.abs(np.fft.fftn(histogram(space, sweep_limit).astype(np.float64))) / space.size
    return spectrum


def measure_bias(space: BiasedSpace, sweep_limit: Optional[int] = None) -> float:
    spectrum = bias_spectrum(space, sweep_limit).ravel()
    spectrum[0] = 0.0
    return float(spectrum.max()) if spectrum.size > 1 else 0.0


def linear_bias(space: BiasedSpace, sweep_limit: Optional[int] = None) -> float:
    """max over a != 0 and residues j of |Pr_S[<a, x> = j mod d] - 1/d| for cyclic G = Z_d."""
    _require_abelian(space.group)
    if len(space.group.invariant_factors) != 1:
        raise GroupMismatch("linear bias is defined for cyclic groups")
    d, n = space.group.order, space.n
    hist = histogram(space, sweep_limit).astype(np.float64)
    averages = np.conj(np.fft.fftn(hist)).ravel() / space.size
    labels = np.indices((d,) * n).reshape(n, -1).T
    weights = code_weights(d, n)
    scaled = np.stack([averages[(t * labels % d) @ weights] for t in range(d)], axis=1)
    # Pr[<a,x> = j] = (1/d) sum_t E[w^{t<a,x>}] w^{-tj}
    distribution = np.fft.fft(scaled, axis=1).real / d
    deviation = np.abs(distribution - 1.0 / d)[1:]
    return float(deviation.max()) if deviation.size else 0.0


def multiset_is_symmetric(space: BiasedSpace) -> bool:
    group = space.group
    weights = code_weights(group.order, space.n)
    forward, backward = [], []
    for rows in space.chunks():
        forward.append(rows @ weights)
        backward.append(group.inv_array[rows] @ weights)
    a = np.sort(np.concatenate(forward))
    b = np.sort(np.concatenate(backward))
    return bool(np.array_equal(a, b))


def _measured(space: BiasedSpace, sweep_limit: Optional[int]) -> Tuple[Optional[float], bool]:
    try:
        return measure_bias(space, sweep_limit), True
    except TooLarge:
        return None, False


# Constructions

def construct_prime_field(q: int, n: int, sweep_limit: Optional[int] = None) -> BiasedSpace:
    if not is_prime(q):
        raise InvalidParameter(f"modulus {q} is not prime")
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    space = BiasedSpace.from_source(
        PowerSource(q, n), construction=ConstructionKind.PRIME_FIELD, modulus=q,
        target_epsilon=(n - 1) / q, provenance=(f"prime_field(q={q})",),
    )
    bias, verified = _measured(space, sweep_limit)
    return space.with_measurement(bias, verified)


def construct_extension_field(p: int, t: int, n: int, sweep_limit: Optional[int] = None) -> BiasedSpace:
    """Powering over F_{p^t} read through the trace; bias at most (n - 1) / p^t."""
    if not is_prime(p) or t < 1:
        raise InvalidParameter(f"need a prime p and t >= 1, got p={p}, t={t}")
    q = p ** t
    space = BiasedSpace.from_source(
        ExtensionFieldSource(p, t, n), construction=ConstructionKind.EXTENSION_FIELD, modulus=q,
        target_epsilon=(n - 1) / q, provenance=(f"extension_field(p={p},t={t})",),
    )
    bias, verified = _measured(space, sweep_limit)
    return space.with_measurement(bias, verified)


def construct_rounding(m: int, n: int, epsilon: Rational, sweep_limit: Optional[int] = None,
                       verify: bool = True, strict: bool = False) -> BiasedSpace:
    """Powering over Z_q rounded into Z_m with q the smallest prime >= 4 n m^2 / eps."""
    if m < 2 or n < 1:
        raise InvalidParameter(f"need m >= 2 and n >= 1, got m={m}, n={n}")
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise InvalidParameter("epsilon must be positive")
    q = next_prime(math.ceil(4 * n * m * m / eps))
    logger.info(f"rounding construction: m={m} n={n} eps={eps} q={q}")
    space = BiasedSpace.from_source(
        PowerSource(q, n, m), construction=ConstructionKind.ROUNDING, modulus=q,
        target_epsilon=float(eps), provenance=(f"rounding(q={q},m={m})",),
    )
    if not verify:
        return space
    bias, verified = _measured(space, sweep_limit)
    if not verified:
        if strict:
            raise TooLargeToVerify(f"Z_{m}^{n} is too large to sweep", m=m, n=n)
        logger.warning(f"rounding space over Z_{m}^{n} left unverified")
    elif bias > eps + BIAS_TOLERANCE:
        raise BiasTooHigh(f"measured bias {bias:.6g} exceeds {float(eps):.6g}", bias=bias, epsilon=float(eps))
    return space.with_measurement(bias, verified)


def quotient_lift(s0: BiasedSpace, group: GroupSpec) -> BiasedSpace:
    """Apply Z_dk^k -> G coordinatewise; s0 lives over Z_dk^k (n coords) or Z_dk (nk coords)."""
    _require_abelian(group)
    factors = group.invariant_factors
    k, top = len(factors), factors[-1]
    source_group = s0.group
    _require_abelian(source_group)
    if source_group.invariant_factors == (top,) * k:
        split = False
    elif source_group.invariant_factors == (top,) and s0.n % k == 0:
        split = True
    else:
        raise GroupMismatch(
            f"cannot lift a space over {source_group.label()}^{s0.n} onto {group.label()}",
            source=source_group.label(), target=group.label())
    source = LiftSource(s0.source, group, split)
    return s0.derive(source, construction=ConstructionKind.QUOTIENT_LIFT,
                     measured_bias=None, verified=False, symmetric=False,
                     provenance=s0.provenance + (f"quotient_lift({group.label()})",))


def symmetrize(space: BiasedSpace) -> BiasedSpace:
    return space.derive(SymmetrizedSource(space.source), symmetric=True, measured_bias=None,
                        verified=False, provenance=space.provenance + ("symmetrize",))


def construct_random(group: GroupSpec, n: int, size: int, seed: int,
                     sweep_limit: Optional[int] = None) -> BiasedSpace:
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, group.order, size=(size, n))
    space = BiasedSpace.from_rows(group, rows, construction=ConstructionKind.RANDOM,
                                  provenance=(f"random(size={size},seed={seed})",))
    if group.kind != GroupKind.ABELIAN:
        return space
    bias, verified = _measured(space, sweep_limit)
    return space.with_measurement(bias, verified)


def identity_space(group: GroupSpec, n: int) -> BiasedSpace:
    return BiasedSpace.from_rows(group, [[group.identity] * n], symmetric=True, boundary=True,
                                 measured_bias=1.0, verified=True, provenance=("identity",))


def _smallest_power_at_least(p: int, target: int) -> int:
    t = 1
    while p ** t < target:
        t += 1
    return t


def _full_space_rows(p: int, n: int) -> np.ndarray:
    codes = np.arange(p ** n, dtype=np.int64)
    return np.stack(np.unravel_index(codes, (p,) * n), axis=1).astype(np.int64)


def _sample_seed(p: int, n: int, eps: Fraction, attempt: int) -> int:
    entropy = (p, n, eps.numerator, eps.denominator, attempt)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _prime_candidates(top: int, nk: int, eps: Fraction, target: int, q: int,
                      sweepable: bool) -> Iterator[BiasedSpace]:
    """Base spaces over Z_top^nk of size at most q^2, proven ones first."""
    t = _smallest_power_at_least(top, target)
    if top ** t <= q:
        yield construct_extension_field(top, t, nk, sweep_limit=1)
    if not sweepable:
        return
    if top ** nk <= q * q:
        yield BiasedSpace.from_rows(GroupSpec.abelian([top]), _full_space_rows(top, nk),
                                    provenance=(f"full_space({top}^{nk})",))
    yield BiasedSpace.from_source(
        PowerSource(q, nk, top), construction=ConstructionKind.PRIME_FIELD, modulus=q,
        provenance=(f"prime_field(q={q},reduced_to={top})",))
    for attempt in range(SAMPLE_ATTEMPTS):
        yield construct_random(GroupSpec.abelian([top]), nk, q * q,
                               _sample_seed(top, nk, eps, attempt), sweep_limit=1)


def size_bound(group: GroupSpec, n: int, epsilon: Rational) -> Optional[int]:
    """2 q^2 with q the smallest prime >= max((nk - 1) / eps, p) for a prime top factor p."""
    top = group.invariant_factors[-1]
    eps = as_fraction(epsilon)
    if not is_prime(top) or eps >= 1:
        return None
    target = max(1, math.ceil((n * len(group.invariant_factors) - 1) / eps))
    q = next_prime(max(target, top))
    return 2 * q * q


def construct_for_group(group: GroupSpec, n: int, epsilon: Rational,
                        sweep_limit: Optional[int] = None) -> BiasedSpace:
    """A symmetric eps-biased multiset in G^n of size O((nk / eps)^2).

    Prime top factor p: with q the smallest prime >= (nk - 1) / eps, powering
    over Z_q when q = p. Otherwise the first of these base spaces of size at
    most q^2 whose measured bias meets eps: powering over F_{p^t} when
    (nk - 1) / eps <= p^t <= q, all of Z_p^nk, powering over Z_q read back
    into Z_p, then seeded samples of q^2 points. On sweepable sizes the
    symmetrised result never exceeds 2 q^2 points. Composite top factor:
    rounding. Either way the result is lifted onto G and symmetrised.
    """
    _require_abelian(group)
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise InvalidParameter("epsilon must be positive")
    if eps >= 1:
        logger.warning("epsilon >= 1: any symmetric space qualifies, returning the identity")
        return identity_space(group, n).model_copy(update={"target_epsilon": float(eps)})

    factors = group.invariant_factors
    k, top = len(factors), factors[-1]
    nk = n * k
    sweepable = group.order ** n <= (DEFAULT_CONFIG.sweep_limit if sweep_limit is None else sweep_limit)

    def finish(base: BiasedSpace) -> BiasedSpace:
        space = symmetrize(quotient_lift(base, group))
        bias, verified = _measured(space, sweep_limit)
        return space.model_copy(update={"target_epsilon": float(eps)}).with_measurement(bias, verified)

    if is_prime(top):
        target = max(1, math.ceil((nk - 1) / eps))
        q = next_prime(max(target, top))
        logger.info(f"prime construction for {group.label()}^{n}: eps={eps} q={q}")
        if q == top:
            return finish(construct_prime_field(q, nk, sweep_limit=1))
        best = None
        for base in _prime_candidates(top, nk, eps, target, q, sweepable):
            space = finish(base)
            if not space.verified:
                return space
            if space.measured_bias <= eps + BIAS_TOLERANCE:
                return space
            logger.info(f"{base.provenance[0]} measured {space.measured_bias:.6g} > {float(eps):.6g}")
            if best is None or space.measured_bias < best:
                best = space.measured_bias
        if not sweepable:
            t = _smallest_power_at_least(top, target)
            logger.warning(f"{group.label()}^{n} too large to sweep: F_{top}^{t} exceeds 2 q^2 points")
            return finish(construct_extension_field(top, t, nk, sweep_limit=1))
        raise BiasTooHigh(f"no space of at most {2 * q * q} points over {group.label()}^{n} "
                          f"reached bias {float(eps):.6g}", bias=best, epsilon=float(eps), q=q)

    space = finish(construct_rounding(top, nk, eps, verify=False))
    if not space.verified:
        logger.warning(f"constructed space over {group.label()}^{n} left unverified")
    elif space.measured_bias > eps + BIAS_TOLERANCE:
        raise BiasTooHigh(f"measured bias {space.measured_bias:.6g} exceeds {float(eps):.6g}",
                          bias=space.measured_bias, epsilon=float(eps))
    return space


if __name__ == "__main__":
    s = construct_prime_field(5, 3)
    print(f"prime field q=5 n=3: size={s.size} bias={s.measured_bias:.6f}")
