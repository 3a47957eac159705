"""Shared domain types: job parameters, assignments, Map outcomes, reducers.

Server, subfile and key indices are 1-based everywhere in these types.
Internally the value store is a dense ``(Q, N, F)`` uint8 bit array indexed
0-based, so ``values[q - 1, n - 1]`` holds the F bits of v_qn.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from . import kernels
from .errors import (
    NonIntegerPK,
    NonIntegerRK,
    QNotDivisibleByK,
    RExceedsP,
    SpecError,
)

_JSON_FIELDS = ("n", "q", "k", "pk", "rk", "f", "mu", "seed")


@dataclass(frozen=True)
class JobSpec:
    """Scalar parameters of one MapReduce job.

    ``pk`` and ``rk`` are the integer products pK and rK. After
    :func:`validate_spec`, ``n`` is the padded subfile count and ``n_raw``
    the count the caller asked for.
    """

    n: int
    q: int
    k: int
    pk: int
    rk: int
    f: int = 32
    mu: float = 1.0
    seed: int = 0
    n_raw: int | None = None

    @property
    def p(self) -> Fraction:
        return Fraction(self.pk, self.k)

    @property
    def r(self) -> Fraction:
        return Fraction(self.rk, self.k)

    @property
    def n_batches(self) -> int:
        return comb(self.k, self.pk)

    @property
    def g(self) -> int:
        return self.n // self.n_batches

    @property
    def n_input(self) -> int:
        return self.n if self.n_raw is None else self.n_raw

    @property
    def n_padding(self) -> int:
        return self.n - self.n_input

    @property
    def keys_per_server(self) -> int:
        return self.q // self.k

    def with_rk(self, rk: int) -> JobSpec:
        return replace(self, rk=rk)

    def conventional(self) -> JobSpec:
        """The same job run the conventional way (pK = rK = 1)."""
        return validate_spec(replace(self, n=self.n_input, pk=1, rk=1, n_raw=None))

    def to_dict(self) -> dict:
        d = asdict(self)
        return {name: d[name] for name in _JSON_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> JobSpec:
        unknown = set(d) - set(_JSON_FIELDS)
        if unknown:
            raise SpecError(f"unknown JobSpec fields: {sorted(unknown)}")
        missing = {"n", "q", "k", "pk", "rk"} - set(d)
        if missing:
            raise SpecError(f"missing JobSpec fields: {sorted(missing)}")
        kw = {}
        for name in _JSON_FIELDS:
            if name not in d:
                continue
            value = d[name]
            if name == "mu":
                kw[name] = float(value)
            else:
                if isinstance(value, bool) or int(value) != value:
                    raise SpecError(f"field {name!r} must be an integer, got {value!r}")
                kw[name] = int(value)
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> JobSpec:
        return cls.from_dict(json.loads(text))


def spec_from_fractions(n, q, k, p, r, f=32, mu=1.0, seed=0) -> JobSpec:
    """Build a spec from the fractions p and r rather than pK and rK."""
    pk = Fraction(p) * k
    rk = Fraction(r) * k
    if pk.denominator != 1:
        raise NonIntegerPK(f"pK = {pk} is not an integer")
    if rk.denominator != 1:
        raise NonIntegerRK(f"rK = {rk} is not an integer")
    return validate_spec(JobSpec(n=n, q=q, k=k, pk=int(pk), rk=int(rk), f=f, mu=mu, seed=seed))


def validate_spec(spec: JobSpec) -> JobSpec:
    """Check the invariants and pad N up to a multiple of C(K, pK).

    Padding subfiles are empty: their intermediate values are all-zero.
    """
    if int(spec.pk) != spec.pk:
        raise NonIntegerPK(f"pK = {spec.pk} is not an integer")
    if int(spec.rk) != spec.rk:
        raise NonIntegerRK(f"rK = {spec.rk} is not an integer")
    for name in ("n", "q", "k", "f"):
        if getattr(spec, name) < 1:
            raise SpecError(f"{name} must be a positive integer")
    if not 1 <= spec.pk <= spec.k:
        raise SpecError(f"pK = {spec.pk} must lie in 1..K={spec.k}")
    if spec.rk < 1:
        raise SpecError(f"rK = {spec.rk} must be at least 1")
    if spec.rk > spec.pk:
        raise RExceedsP(f"r = {spec.rk}/{spec.k} exceeds p = {spec.pk}/{spec.k}")
    if spec.q % spec.k:
        raise QNotDivisibleByK(f"Q = {spec.q} is not divisible by K = {spec.k}")
    if not spec.mu > 0:
        raise SpecError("mu must be positive")
    if spec.seed < 0 or spec.seed >= 2**64:
        raise SpecError("seed must fit in an unsigned 64-bit integer")
    n_input = spec.n_input
    batches = comb(spec.k, spec.pk)
    g = -(-n_input // batches)
    return replace(spec, pk=int(spec.pk), rk=int(spec.rk), n=g * batches, n_raw=n_input)


@dataclass(frozen=True)
class Assignment:
    """Bipartite subfile/server relation, stored in both directions."""

    by_server: tuple[tuple[int, ...], ...]
    by_subfile: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rebuilt = _invert(self.by_subfile, len(self.by_server))
        if rebuilt != self.by_server:
            raise ValueError("by_server and by_subfile disagree")

    @classmethod
    def from_by_server(cls, by_server: Sequence[Sequence[int]], n: int) -> Assignment:
        by_server = tuple(tuple(sorted(m)) for m in by_server)
        return cls(by_server=by_server, by_subfile=_invert(by_server, n))

    @classmethod
    def from_by_subfile(cls, by_subfile: Sequence[Sequence[int]], k: int) -> Assignment:
        by_subfile = tuple(tuple(sorted(a)) for a in by_subfile)
        return cls(by_server=_invert(by_subfile, k), by_subfile=by_subfile)

    @property
    def k(self) -> int:
        return len(self.by_server)

    @property
    def n(self) -> int:
        return len(self.by_subfile)

    def to_dict(self) -> dict:
        return {"by_server": [list(m) for m in self.by_server]}

    @classmethod
    def from_dict(cls, d: dict, n: int) -> Assignment:
        return cls.from_by_server(d["by_server"], n)


def _invert(rel: Sequence[Sequence[int]], size: int) -> tuple[tuple[int, ...], ...]:
    out: list[list[int]] = [[] for _ in range(size)]
    for i, members in enumerate(rel, start=1):
        for j in members:
            out[j - 1].append(i)
    return tuple(tuple(sorted(x)) for x in out)


def server_mask(servers) -> int:
    """Bitmask with bit (k - 1) set for each 1-based server k."""
    m = 0
    for s in servers:
        m |= 1 << (s - 1)
    return m


@dataclass(frozen=True, eq=False)
class MapOutcome:
    """Which servers actually finished each subfile, plus the value store.

    ``mappers[n - 1]`` is A'_n as an ascending row of rK 1-based servers.
    ``values`` holds ground truth for every (q, n); a server may only read
    the columns of subfiles it mapped, which :meth:`local_values` enforces.
    """

    mappers: np.ndarray
    values: np.ndarray
    k: int
    masks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.mappers, dtype=np.int64)
        if m.ndim != 2 or m.size == 0 or m.min() < 1 or m.max() > self.k:
            raise ValueError("mappers must be an (N, rK) array of servers in 1..K")
        if np.any(np.diff(m, axis=1) <= 0):
            raise ValueError("each A'_n must list distinct servers in ascending order")
        if self.values.ndim != 3 or self.values.shape[1] != m.shape[0]:
            raise ValueError("values must have shape (Q, N, F)")
        m.setflags(write=False)
        if self.values.dtype != object:
            self.values.setflags(write=False)
        masks = np.bitwise_or.reduce(np.uint64(1) << (m - 1).astype(np.uint64), axis=1)
        object.__setattr__(self, "mappers", m)
        object.__setattr__(self, "masks", masks)

    @property
    def n(self) -> int:
        return self.mappers.shape[0]

    @property
    def rk(self) -> int:
        return self.mappers.shape[1]

    @property
    def f(self) -> int:
        return self.values.shape[2]

    @cached_property
    def mappers_of_subfile(self) -> tuple[tuple[int, ...], ...]:
        """A'_n for n = 1..N."""
        return tuple(tuple(row) for row in self.mappers.tolist())

    @cached_property
    def mapped_by_server(self) -> tuple[tuple[int, ...], ...]:
        """M'_k for k = 1..K."""
        return tuple(tuple(self.mapped_by(k).tolist()) for k in range(1, self.k + 1))

    def mapped_by(self, server: int) -> np.ndarray:
        bit = np.uint64(1) << np.uint64(server - 1)
        return np.flatnonzero(self.masks & bit) + 1

    def knows(self, server: int, n: int) -> bool:
        return bool(int(self.masks[n - 1]) >> (server - 1) & 1)

    def local_values(self, server: int, keys: Sequence[int], subfiles: Sequence[int]) -> np.ndarray:
        """Bits of v_qn for the given keys and subfiles, as seen by ``server``.

        Raises ``PermissionError`` if the server did not map one of the
        subfiles; decoders must never read values they do not hold.
        """
        subfiles = np.asarray(subfiles, dtype=np.int64)
        if subfiles.size:
            bit = np.uint64(1) << np.uint64(server - 1)
            if not np.all(self.masks[subfiles - 1] & bit):
                raise PermissionError(f"server {server} did not map all of {subfiles.tolist()}")
        keys = np.asarray(keys, dtype=np.int64)
        return self.values[np.ix_(keys - 1, subfiles - 1)]

    def with_values(self, values: np.ndarray) -> MapOutcome:
        return MapOutcome(self.mappers, values, self.k)


def generate_values(spec: JobSpec) -> np.ndarray:
    """Keyed pseudorandom value store; padding subfiles are all-zero."""
    return kernels.keyed_value_bits(spec.seed, spec.q, spec.n, spec.f, spec.n_input)


@dataclass(frozen=True)
class ReducerDistribution:
    """W_k for every server: which keys each server reduces."""

    by_server: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        sizes = {len(w) for w in self.by_server}
        keys = [q for w in self.by_server for q in w]
        if len(sizes) > 1:
            raise ValueError("reducer sets have unequal sizes")
        if len(set(keys)) != len(keys):
            raise ValueError("reducer sets overlap")
        if sorted(keys) != list(range(1, len(keys) + 1)):
            raise ValueError("reducer sets do not cover 1..Q")

    @property
    def k(self) -> int:
        return len(self.by_server)

    @property
    def q(self) -> int:
        return sum(len(w) for w in self.by_server)

    def keys_of(self, server: int) -> tuple[int, ...]:
        return self.by_server[server - 1]


def canonical_reducers(spec: JobSpec) -> ReducerDistribution:
    """W_k = {(k-1)Q/K + 1, ..., kQ/K}."""
    b = spec.q // spec.k
    return ReducerDistribution(
        tuple(tuple(range((k - 1) * b + 1, k * b + 1)) for k in range(1, spec.k + 1))
    )


def random_reducers(spec: JobSpec, rng: np.random.Generator) -> ReducerDistribution:
    """A uniformly random valid reducer distribution."""
    perm = rng.permutation(np.arange(1, spec.q + 1))
    b = spec.q // spec.k
    return ReducerDistribution(
        tuple(tuple(sorted(int(x) for x in perm[i * b:(i + 1) * b])) for i in range(spec.k))
    )
