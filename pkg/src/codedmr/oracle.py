"""Independent checks of the shuffle and timing modules.

None of the counting here reuses code from :mod:`codedmr.shuffle`:

* :func:`brute_force_load` recounts the coded transcript length directly
  from the raw A'_n tuples.
* :func:`brute_force_decode_check` treats the encoder as a black-box linear
  map over GF(2). It runs it once on a symbolic store (every bit is a
  distinct Python-int basis vector), so each payload bit becomes an
  equation, then solves each server's system by elimination and compares the
  solution with ground truth. It never looks at the cancellation order the
  real decoder uses.
* :func:`empirical_order_statistic` and :func:`empirical_overall_time` sample
  exponential task times and take order statistics by sorting.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from math import comb

import numpy as np

from . import kernels
from .errors import TooLarge
from .mapexec import TimingModel
from .model import JobSpec, MapOutcome, ReducerDistribution

log = logging.getLogger(__name__)

MAX_K = 10


def _subsets(k, size):
    """size-subsets of 1..k by bitmask scan (no itertools on purpose)."""
    out = []
    for mask in range(1 << k):
        if bin(mask).count("1") == size:
            out.append(tuple(j + 1 for j in range(k) if mask >> j & 1))
    return out


def brute_force_load(outcome: MapOutcome, reducers: ReducerDistribution, spec: JobSpec) -> float:
    """Coded-shuffle load recounted from the mapper sets alone."""
    if spec.k > MAX_K:
        raise TooLarge(f"K = {spec.k} > {MAX_K}")
    rk = spec.rk
    counts = Counter(tuple(sorted(a)) for a in outcome.mappers_of_subfile)
    total = 0
    for S in _subsets(spec.k, rk + 1):
        seglen = {}
        for k in S:
            rest = tuple(x for x in S if x != k)
            bits = len(reducers.by_server[k - 1]) * counts.get(rest, 0) * spec.f
            for pos, i in enumerate(rest):
                seglen[k, i] = bits // rk + (1 if pos < bits % rk else 0)
        for i in S:
            total += max(seglen[k, i] for k in S if k != i)
    return total / spec.f


def _symbolic_outcome(outcome: MapOutcome) -> MapOutcome:
    q, n, f = outcome.values.shape
    sym = np.empty((q, n, f), dtype=object)
    flat = sym.reshape(-1)
    for i in range(flat.size):
        flat[i] = 1 << i
    return outcome.with_values(sym)


def _truth_int(values: np.ndarray) -> int:
    bits = np.asarray(values, dtype=np.uint8).reshape(-1)
    # bit i of the integer is flat bit i of the store
    return int("0" + "".join("1" if b else "0" for b in bits[::-1].tolist()), 2)


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


def _message_key(m):
    return (m.sender, m.subset, m.tag, m.meta)


def brute_force_decode_check(transcript, outcome: MapOutcome, reducers: ReducerDistribution,
                             spec: JobSpec, scheme: str | None = None) -> bool:
    """True iff every server can solve for every value it needs from the
    transcript and its own Map outputs, and the solution is ground truth."""
    from .shuffle import shuffle  # encoder used only as a black box

    if spec.k > MAX_K:
        raise TooLarge(f"K = {spec.k} > {MAX_K}")
    scheme = scheme or {"coded": "coded", "uncoded": "uncoded", "conv": "conventional"}[transcript.scheme]
    sym_outcome = _symbolic_outcome(outcome)
    sym_rows = {_message_key(m): m.payload for m in shuffle(sym_outcome, reducers, spec, scheme).messages}

    truth = _truth_int(outcome.values)
    equations = []
    for m in transcript.messages:
        rows = sym_rows.get(_message_key(m))
        if rows is None or len(rows) != len(m.payload):
            log.debug("message %s has no symbolic counterpart", _message_key(m)[:3])
            return False
        for row, bit in zip(rows, m.payload.tolist()):
            row = int(row)
            if _parity(row & truth) != bit:
                log.debug("payload bit inconsistent with the encoder's linear map")
                return False
            equations.append((row, bit))

    qn, n, f = outcome.values.shape
    for k in range(1, spec.k + 1):
        known = 0
        for sub in outcome.mapped_by_server[k - 1]:
            for q in range(qn):
                base = (q * n + sub - 1) * f
                known |= ((1 << f) - 1) << base
        basis = {}
        for row, bit in equations:
            u = row & ~known
            rhs = bit ^ _parity(row & known & truth)
            while u:
                low = u & -u
                if low in basis:
                    bu, br = basis[low]
                    u ^= bu
                    rhs ^= br
                else:
                    basis[low] = (u, rhs)
                    break
            else:
                if rhs:
                    return False
        for q in reducers.by_server[k - 1]:
            for sub in range(1, n + 1):
                if outcome.knows(k, sub):
                    continue
                for b in range(f):
                    col = ((q - 1) * n + sub - 1) * f + b
                    v, val = 1 << col, 0
                    while v:
                        low = v & -v
                        if low not in basis:
                            return False
                        bu, br = basis[low]
                        v ^= bu
                        val ^= br
                    if val != (truth >> col) & 1:
                        return False
    return True


# ------------------------------------------------------------- timing oracle


@dataclass(frozen=True)
class OrderStatSample:
    mean: float
    samples: np.ndarray  # sorted ascending

    def ecdf(self, s):
        return np.searchsorted(self.samples, s, side="right") / len(self.samples)

    def ks_distance(self, cdf) -> float:
        """Kolmogorov-Smirnov distance to a vectorised cdf."""
        x = self.samples
        m = len(x)
        c = np.asarray(cdf(x), dtype=np.float64)
        hi = np.arange(1, m + 1) / m - c
        lo = c - np.arange(0, m) / m
        return float(max(hi.max(), lo.max()))


def empirical_order_statistic(t: TimingModel, spec: JobSpec, samples: int, seed) -> OrderStatSample:
    """Monte-Carlo S_n: the rK-th smallest of pK exponential task times."""
    if samples < 10_000:
        raise ValueError("use at least 10^4 samples")
    rng = np.random.default_rng(seed)
    draws = rng.exponential(1.0 / t.rate, size=(samples, spec.pk))
    s = kernels.kth_smallest_rows(draws, spec.rk)
    s.sort()
    return OrderStatSample(float(s.mean()), s)


def empirical_overall_time(t: TimingModel, spec: JobSpec, trials: int, seed,
                           n: int | None = None, chunk: int = 200) -> tuple[float, float]:
    """Monte-Carlo E{max_n S_n}; returns (mean, standard error)."""
    n = spec.n if n is None else n
    rng = np.random.default_rng(seed)
    maxima = []
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        draws = rng.exponential(1.0 / t.rate, size=(m * n, spec.pk))
        s = kernels.kth_smallest_rows(draws, spec.rk).reshape(m, n)
        maxima.append(s.max(axis=1))
        done += m
    x = np.concatenate(maxima)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(len(x)))


# ------------------------------------------------------- random instances


def random_small_spec(rng: np.random.Generator, k_max: int = 8, pk_max: int = 5,
                      g_max: int = 3) -> JobSpec:
    """A random small valid job, for property suites and ``verify``."""
    from .model import validate_spec

    k = int(rng.integers(2, k_max + 1))
    pk = int(rng.integers(1, min(k, pk_max) + 1))
    rk = int(rng.integers(1, pk + 1))
    g = int(rng.integers(1, g_max + 1))
    q = k * int(rng.integers(1, 3))
    f = int(rng.integers(1, 9))
    n = g * comb(k, pk) - int(rng.integers(0, 2))  # sometimes exercise padding
    return validate_spec(JobSpec(n=max(n, 1), q=q, k=k, pk=pk, rk=rk, f=f,
                                 seed=int(rng.integers(0, 2**31))))
