"""Data shuffling over a shared multicast link.

Three schemes produce a :class:`ShuffleTranscript`:

* ``coded``: for every (rK+1)-subset S and k in S, the bits V^k_{S-k} that
  k needs and only S-k hold are split into rK segments, one per server of
  S-k; each i in S multicasts the XOR of the segments associated with it.
* ``uncoded``: every missing value is sent once, by its lowest-indexed
  mapper.
* ``conventional``: the uncoded exchange under pK = rK = 1.

:func:`decode_all` rebuilds, for every server, the full table of values it
reduces. Decoding reads only the server's own mapped values, the received
payloads and the (public) mapper sets A'_n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from . import kernels
from .errors import DecodeFailure, WrongAssignment
from .model import JobSpec, MapOutcome, ReducerDistribution, server_mask

CODED = "coded"
UNCODED = "uncoded"
CONV = "conv"


@dataclass(frozen=True, eq=False, slots=True)
class Message:
    sender: int
    subset: tuple[int, ...]
    payload: np.ndarray
    tag: str
    # coded: ((receiver, segment bits), ...); uncoded/conv: (receiver, q, n)
    meta: tuple = ()

    @property
    def bits(self) -> int:
        return len(self.payload)

    def header(self) -> dict:
        return {"sender": self.sender, "subset": list(self.subset), "bits": self.bits, "tag": self.tag}


@dataclass(frozen=True, eq=False)
class ShuffleTranscript:
    messages: tuple[Message, ...]
    scheme: str

    @property
    def total_bits(self) -> int:
        return sum(len(m.payload) for m in self.messages)

    def __len__(self):
        return len(self.messages)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.header()) + "\n" for m in self.messages)

    def without(self, index: int) -> ShuffleTranscript:
        msgs = self.messages[:index] + self.messages[index + 1:]
        return ShuffleTranscript(msgs, self.scheme)


def measured_load(transcript: ShuffleTranscript, spec: JobSpec) -> float:
    """Shuffle traffic in units of F-bit slots."""
    return transcript.total_bits / spec.f


def segment_bounds(length: int, parts: int) -> list[tuple[int, int]]:
    """Near-equal split of ``length`` bits; the first ``length % parts``
    segments are one bit longer."""
    base, extra = divmod(length, parts)
    bounds = []
    start = 0
    for j in range(parts):
        stop = start + base + (1 if j < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def group_subfiles(outcome: MapOutcome) -> dict[int, np.ndarray]:
    """Mapper-set bitmask -> sorted 1-based subfile indices with that A'_n."""
    masks = outcome.masks
    order = np.argsort(masks, kind="stable")
    uniq, starts = np.unique(masks[order], return_index=True)
    ends = np.append(starts[1:], len(order))
    return {int(u): order[a:b] + 1 for u, a, b in zip(uniq, starts, ends)}


_EMPTY = np.zeros(0, dtype=np.int64)


def need_set(outcome: MapOutcome, reducers: ReducerDistribution, k: int,
             others: Iterable[int], groups=None):
    """(keys, subfiles) making up V^k_{others}, in (q, n) lexicographic order."""
    groups = group_subfiles(outcome) if groups is None else groups
    subfiles = groups.get(server_mask(others), _EMPTY)
    return reducers.keys_of(k), subfiles


def _need_bits(values, keys, subfiles):
    if len(subfiles) == 0:
        return values[:0, :0].reshape(-1)
    q = np.asarray(keys, dtype=np.int64) - 1
    return values[np.ix_(q, subfiles - 1)].reshape(-1)


def colex_subsets(k: int, size: int) -> list[tuple[int, ...]]:
    """``size``-subsets of 1..k ordered by their largest element first."""
    return sorted(combinations(range(1, k + 1), size), key=lambda s: s[::-1])


def shuffle_coded(outcome: MapOutcome, reducers: ReducerDistribution, spec: JobSpec) -> ShuffleTranscript:
    """Messages are ordered by S in colex order, then by sender within S."""
    rk = spec.rk
    values = outcome.values
    groups = group_subfiles(outcome)
    messages = []
    for S in colex_subsets(spec.k, rk + 1):
        segs = {}
        for k in S:
            rest = tuple(x for x in S if x != k)
            subfiles = groups.get(server_mask(rest), _EMPTY)
            if len(subfiles) == 0:
                continue
            v = _need_bits(values, reducers.keys_of(k), subfiles)
            for i, (a, b) in zip(rest, segment_bounds(len(v), rk)):
                if b > a:
                    segs[k, i] = v[a:b]
        for i in S:
            parts = [(k, segs[k, i]) for k in S if k != i and (k, i) in segs]
            if not parts:
                continue
            width = max(len(p) for _, p in parts)
            payload = kernels.xor_fold([p for _, p in parts], width)
            meta = tuple((k, len(p)) for k, p in parts)
            messages.append(Message(i, S, payload, CODED, meta))
    return ShuffleTranscript(tuple(messages), CODED)


def _unicast_all(outcome, reducers, spec, tag):
    everyone = tuple(range(1, spec.k + 1))
    values = outcome.values
    senders = outcome.mappers[:, 0]
    messages = []
    for k in everyone:
        bit = np.uint64(1) << np.uint64(k - 1)
        missing = np.flatnonzero((outcome.masks & bit) == 0) + 1
        for q in reducers.keys_of(k):
            row = values[q - 1]
            for n in missing.tolist():
                messages.append(Message(int(senders[n - 1]), everyone, row[n - 1], tag, (k, q, n)))
    return ShuffleTranscript(tuple(messages), tag)


def shuffle_uncoded(outcome: MapOutcome, reducers: ReducerDistribution, spec: JobSpec) -> ShuffleTranscript:
    return _unicast_all(outcome, reducers, spec, UNCODED)


def shuffle_conventional(outcome: MapOutcome, reducers: ReducerDistribution, spec: JobSpec) -> ShuffleTranscript:
    if spec.pk != 1 or outcome.rk != 1:
        raise WrongAssignment("conventional shuffling needs every subfile mapped at exactly one server")
    return _unicast_all(outcome, reducers, spec, CONV)


SCHEMES = {
    "coded": shuffle_coded,
    "uncoded": shuffle_uncoded,
    "conventional": shuffle_conventional,
}


def shuffle(outcome, reducers, spec, scheme="coded") -> ShuffleTranscript:
    try:
        fn = SCHEMES[scheme]
    except KeyError:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    return fn(outcome, reducers, spec)


# ------------------------------------------------------------------ decoding


def decode_all(transcript: ShuffleTranscript, outcome: MapOutcome,
               reducers: ReducerDistribution, spec: JobSpec) -> dict[int, np.ndarray]:
    """Per-server tables ``(len(W_k), N, F)`` of every value the server reduces.

    Row j of server k's table is key ``reducers.keys_of(k)[j]``. Raises
    :class:`DecodeFailure` when some needed value is not recoverable.
    """
    groups = group_subfiles(outcome)
    if transcript.scheme == CODED:
        index = {(m.sender, m.subset): m for m in transcript.messages}
    else:
        index = {m.meta: m for m in transcript.messages}
    tables = {}
    for k in range(1, spec.k + 1):
        keys = reducers.keys_of(k)
        table = np.zeros((len(keys), outcome.n, outcome.f), dtype=outcome.values.dtype)
        filled = np.zeros((len(keys), outcome.n), dtype=bool)
        local = outcome.mapped_by(k)
        if local.size:
            table[:, local - 1] = outcome.local_values(k, keys, local)
            filled[:, local - 1] = True
        if transcript.scheme == CODED:
            _decode_coded(k, index, outcome, reducers, spec, groups, table, filled)
        else:
            for j, q in enumerate(keys):
                for n in np.flatnonzero(~filled[j]) + 1:
                    m = index.get((k, q, int(n)))
                    if m is None or m.bits != outcome.f:
                        raise DecodeFailure(k, q, int(n), "value never sent")
                    table[j, n - 1] = m.payload
                    filled[j, n - 1] = True
        missing = np.argwhere(~filled)
        if missing.size:
            j, n = missing[0]
            raise DecodeFailure(k, keys[j], int(n) + 1, "no message covers it")
        tables[k] = table
    return tables


def _decode_coded(k, index, outcome, reducers, spec, groups, table, filled):
    rk = spec.rk
    keys = reducers.keys_of(k)
    others_all = [x for x in range(1, spec.k + 1) if x != k]
    f = outcome.f
    for rest in combinations(others_all, rk):
        subfiles = groups.get(server_mask(rest), _EMPTY)
        if len(subfiles) == 0:
            continue
        S = tuple(sorted(rest + (k,)))
        length = len(keys) * len(subfiles) * f
        pieces = []
        for i, (a, b) in zip(rest, segment_bounds(length, rk)):
            if b == a:
                continue
            m = index.get((i, S))
            if m is None or m.bits < b - a:
                flat = a // f
                q = keys[flat // len(subfiles)]
                n = int(subfiles[flat % len(subfiles)])
                raise DecodeFailure(k, q, n, f"missing coded segment from server {i} for S={S}")
            acc = m.payload.copy()
            for kk in S:
                if kk in (i, k):
                    continue
                # k belongs to S - kk, so it holds every value of V^kk_{S-kk}
                kk_rest = tuple(x for x in S if x != kk)
                kk_sub = groups.get(server_mask(kk_rest), _EMPTY)
                if len(kk_sub) == 0:
                    continue
                kk_bits = outcome.local_values(k, reducers.keys_of(kk), kk_sub).reshape(-1)
                pos = kk_rest.index(i)
                sa, sb = segment_bounds(len(kk_bits), rk)[pos]
                acc[: sb - sa] ^= kk_bits[sa:sb]
            pieces.append(acc[: b - a])
        v = np.concatenate(pieces).reshape(len(keys), len(subfiles), f)
        table[:, subfiles - 1] = v
        filled[:, subfiles - 1] = True


def verify_decoded(tables: dict[int, np.ndarray], outcome: MapOutcome,
                   reducers: ReducerDistribution) -> None:
    """Compare decoded tables bit-for-bit with the ground-truth store."""
    for k, table in tables.items():
        keys = reducers.keys_of(k)
        truth = outcome.values[np.asarray(keys, dtype=np.int64) - 1]
        bad = np.argwhere(np.any(table != truth, axis=2))
        if bad.size:
            j, n = bad[0]
            raise DecodeFailure(k, keys[j], int(n) + 1, "decoded bits differ from ground truth")
