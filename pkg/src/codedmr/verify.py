"""Randomised cross-check of the shuffle schemes against the oracles."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DecodeFailure
from .experiment import resolve
from .assignment import assign
from .mapexec import execute_maps
from .model import random_reducers
from .oracle import brute_force_decode_check, brute_force_load, random_small_spec
from .shuffle import decode_all, measured_load, shuffle, verify_decoded

log = logging.getLogger(__name__)


@dataclass
class VerifyReport:
    instances: int = 0
    runs: int = 0
    gf2_checked: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"instances": self.instances, "runs": self.runs, "gf2_checked": self.gf2_checked,
                "failures": self.failures, "ok": self.ok}


def verify_instances(instances: int, seed: int, gf2: int | None = 200,
                     schemes=("coded", "uncoded", "conventional")) -> VerifyReport:
    """Decode every scheme on ``instances`` random small jobs.

    The first ``gf2`` instances (all of them when None) are additionally
    run through the GF(2) elimination oracle; coded runs always have their
    load recounted independently.
    """
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    for i in range(instances):
        base = random_small_spec(rng)
        straggler_seed = int(rng.integers(0, 2**63))
        do_gf2 = gf2 is None or i < gf2
        for scheme in schemes:
            spec, strategy = resolve(base, None, scheme)
            outcome = execute_maps(assign(spec, strategy), spec, straggler_seed)
            reducers = random_reducers(spec, rng)
            transcript = shuffle(outcome, reducers, spec, scheme)
            report.runs += 1
            where = {"instance": i, "scheme": scheme, "spec": spec.to_dict()}
            try:
                verify_decoded(decode_all(transcript, outcome, reducers, spec), outcome, reducers)
            except DecodeFailure as exc:
                report.failures.append({**where, "check": "decode", "detail": str(exc)})
            if scheme == "coded":
                brute = brute_force_load(outcome, reducers, spec)
                if brute != measured_load(transcript, spec):
                    report.failures.append({**where, "check": "load",
                                            "detail": f"{brute} != {measured_load(transcript, spec)}"})
            if do_gf2:
                report.gf2_checked += 1
                if not brute_force_decode_check(transcript, outcome, reducers, spec):
                    report.failures.append({**where, "check": "gf2", "detail": "elimination failed"})
        report.instances += 1
        log.debug("instance %d done (%s)", i, base.to_json())
    return report
