"""Word counting over a 12-chapter corpus, run end to end through the coded
pipeline with real Map and Reduce functions.

Four servers each count one of the words A, B, C, D. Every chapter is
mapped by two servers; counts travel as 8-bit unsigned integers.
"""

from __future__ import annotations

import json
from collections import Counter
from importlib import resources

import numpy as np

from .assignment import assign_batch
from .mapexec import execute_maps
from .model import JobSpec, ReducerDistribution, validate_spec
from .shuffle import decode_all, measured_load, segment_bounds, group_subfiles, shuffle_coded, verify_decoded

WIDTH = 8


class DemoFailure(AssertionError):
    pass


def load_corpus() -> tuple[list[str], list[str]]:
    raw = resources.files("codedmr").joinpath("data/wordcount_corpus.json").read_text()
    d = json.loads(raw)
    return d["keys"], d["chapters"]


def map_chapter(text: str, keys) -> list[int]:
    counts = Counter(text.split())
    return [counts[w] for w in keys]


def encode(count: int, width: int = WIDTH) -> np.ndarray:
    if not 0 <= count < 1 << width:
        raise OverflowError(f"count {count} does not fit in {width} bits")
    return np.array([(count >> b) & 1 for b in range(width)], dtype=np.uint8)


def decode(bits) -> int:
    return sum(int(b) << i for i, b in enumerate(np.asarray(bits).tolist()))


def _label(keys, q, n):
    return f"{keys[q - 1].lower()}{n}"


def run_demo(out=print) -> dict[str, int]:
    """Run the demo, printing a trace through ``out``; returns word totals.

    Raises :class:`DemoFailure` if any reduced total differs from a
    direct count over the whole corpus.
    """
    keys, chapters = load_corpus()
    k = len(keys)
    spec = validate_spec(JobSpec(n=len(chapters), q=len(keys), k=k, pk=2, rk=2, f=WIDTH))
    reducers = ReducerDistribution(tuple((q,) for q in range(1, k + 1)))

    table = np.array([map_chapter(c, keys) for c in chapters], dtype=np.int64).T  # (Q, N)
    values = np.stack([np.stack([encode(int(c)) for c in row]) for row in table])

    assignment = assign_batch(spec)
    outcome = execute_maps(assignment, spec, seed=0, values=values)

    out("Map task assignment")
    for s, m in enumerate(assignment.by_server, start=1):
        out(f"  server {s} reduces {keys[s - 1]}, maps chapters {list(m)}")

    transcript = shuffle_coded(outcome, reducers, spec)
    groups = group_subfiles(outcome)

    def segment_owner(kk, rest, i):
        # each segment here is exactly one value: key kk at one chapter
        subs = groups[sum(1 << (x - 1) for x in rest)]
        bounds = segment_bounds(len(subs) * WIDTH, len(rest))
        a, b = bounds[rest.index(i)]
        if b - a != WIDTH:
            raise DemoFailure("segment does not line up with a single value")
        return kk, int(subs[a // WIDTH])

    out("")
    out(f"Coded multicasts ({len(transcript)} pairs)")
    decode_lines = []
    for m in transcript.messages:
        parts = []
        for kk, _ in m.meta:
            rest = tuple(x for x in m.subset if x != kk)
            parts.append(segment_owner(kk, rest, m.sender))
        words = "".join(keys[q - 1] for q, _ in parts)
        total = sum(int(table[q - 1, n - 1]) for q, n in parts)
        idx = ",".join(str(n) for _, n in parts)
        wire = decode(m.payload)
        names = " + ".join(_label(keys, q, n) for q, n in parts)
        out(f"  server {m.sender} -> {set(m.subset) - {m.sender}}: ({words}, {total})[{idx}]"
            f"  = {names}, wire value {wire:#04x}")
        for q, n in parts:
            known = [(qq, nn) for qq, nn in parts if (qq, nn) != (q, n)]
            have = " ^ ".join(_label(keys, qq, nn) for qq, nn in known)
            got = wire
            for qq, nn in known:
                got ^= int(table[qq - 1, nn - 1])
            decode_lines.append(
                f"  server {q}: {wire:#04x} ^ {have} -> {_label(keys, q, n)} = {got}"
            )

    tables = decode_all(transcript, outcome, reducers, spec)
    verify_decoded(tables, outcome, reducers)

    out("")
    out("Decoding")
    for line in sorted(decode_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
        out(line)

    out("")
    out(f"Communication load: {measured_load(transcript, spec):g}")
    out("Reduce")
    direct = Counter(w for c in chapters for w in c.split())
    totals = {}
    for s in range(1, k + 1):
        (q,) = reducers.keys_of(s)
        counts = [decode(bits) for bits in tables[s][0]]
        totals[keys[q - 1]] = sum(counts)
        ok = totals[keys[q - 1]] == direct[keys[q - 1]]
        out(f"  server {s}: {keys[q - 1]} = {' + '.join(map(str, counts))} = {totals[keys[q - 1]]}"
            f"  (direct count {direct[keys[q - 1]]}, {'ok' if ok else 'MISMATCH'})")
        if not ok:
            raise DemoFailure(f"total for {keys[q - 1]} disagrees with the direct count")
    return totals
