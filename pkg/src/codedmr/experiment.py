"""Multi-trial runs of the full assign -> map -> shuffle -> decode pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from . import analysis
from .assignment import assign
from .mapexec import execute_maps, trial_seed
from .model import JobSpec, canonical_reducers, generate_values
from .shuffle import decode_all, shuffle, verify_decoded

log = logging.getLogger(__name__)

SCHEME_NAMES = ("coded", "uncoded", "conventional")


def resolve(spec: JobSpec, strategy: str | None, scheme: str) -> tuple[JobSpec, str]:
    """Pick the spec and assignment strategy a scheme runs under.

    The conventional scheme always runs the pK = rK = 1 variant of the job
    on the conventional assignment.
    """
    if scheme not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {list(SCHEME_NAMES)}")
    if scheme == "conventional":
        if strategy not in (None, "conventional"):
            raise ValueError("the conventional scheme needs the conventional strategy")
        return spec.conventional(), "conventional"
    return spec, strategy or "batch"


def analytic_load(spec: JobSpec, scheme: str) -> float:
    if scheme == "coded":
        return analysis.load_cmr(spec)
    if scheme == "uncoded":
        return analysis.load_uncoded(spec)
    return analysis.load_conventional(spec)


@dataclass
class RunResult:
    spec: JobSpec
    strategy: str
    scheme: str
    bits: list[int] = field(default_factory=list)
    messages: list[int] = field(default_factory=list)
    decoded: bool = False
    first_transcript: object = None

    @property
    def loads(self) -> list[float]:
        return [b / self.spec.f for b in self.bits]

    @property
    def mean_load(self) -> float:
        return float(self.mean_load_exact)

    @property
    def mean_load_exact(self) -> Fraction:
        return Fraction(sum(self.bits), self.spec.f * len(self.bits))


def run_job(spec: JobSpec, strategy: str | None = None, scheme: str = "coded", trials: int = 1,
            decode: bool = True, keep_transcript: bool = False) -> RunResult:
    """Run ``trials`` independent straggler realisations of one job.

    Trial t draws its stragglers from ``SeedSequence([spec.seed, t])``, so
    results do not depend on how many trials are run or in which order.
    Raises ``DecodeFailure`` if any server fails to recover its values.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    spec, strategy = resolve(spec, strategy, scheme)
    assignment = assign(spec, strategy)
    reducers = canonical_reducers(spec)
    values = generate_values(spec)
    result = RunResult(spec, strategy, scheme)
    # with r = p there is no randomness left, one realisation covers them all
    distinct = 1 if spec.rk == spec.pk else trials
    for t in range(trials):
        if t >= distinct:
            result.bits.append(result.bits[0])
            result.messages.append(result.messages[0])
            continue
        outcome = execute_maps(assignment, spec, trial_seed(spec.seed, t), values=values)
        transcript = shuffle(outcome, reducers, spec, scheme)
        if decode:
            verify_decoded(decode_all(transcript, outcome, reducers, spec), outcome, reducers)
        if keep_transcript and t == 0:
            result.first_transcript = transcript
        result.bits.append(transcript.total_bits)
        result.messages.append(len(transcript))
        log.debug("trial %d: %d bits in %d messages", t, transcript.total_bits, len(transcript))
    result.decoded = decode
    log.info("%s/%s: mean load %.6g over %d trials", strategy, scheme, result.mean_load, trials)
    return result
