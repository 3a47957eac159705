"""Map-task execution: straggler sampling, the value store, Map timing.

Each subfile is finished by a uniformly random rK-subset of the pK servers
it was assigned to. The timing functions describe the processor-sharing
model where every one of a server's pN tasks runs at rate mu / (pN) and a
subfile's completion time is the rK-th order statistic of pK i.i.d.
exponentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .errors import BadSetSize, NegativeTime, QuadratureFailure
from .model import Assignment, JobSpec, MapOutcome, generate_values, server_mask

# Survival mass left beyond the truncation point of the E{S} integral.
TAIL_MASS = 1e-9
QUAD_RTOL = 1e-5
CDF_TOL = 1e-9


def trial_seed(job_seed: int, trial: int) -> np.random.SeedSequence:
    """Independent, order-free seed for trial ``trial`` of a job."""
    return np.random.SeedSequence([int(job_seed), int(trial)])


def execute_maps(assignment: Assignment, spec: JobSpec, seed, values=None) -> MapOutcome:
    """Sample A'_n for every subfile and attach the value store.

    ``seed`` drives only the straggler draw; the values come from the job
    seed in ``spec`` so they are identical across trials.
    """
    by_subfile = np.array(assignment.by_subfile, dtype=np.int64)
    if by_subfile.shape != (spec.n, spec.pk):
        raise ValueError(f"assignment does not give every subfile pK = {spec.pk} servers")
    if spec.rk == spec.pk:
        chosen = by_subfile
    else:
        rng = np.random.default_rng(seed)
        keys = rng.random(by_subfile.shape)
        pos = kernels.smallest_k_positions(keys, spec.rk)
        chosen = np.take_along_axis(by_subfile, pos, axis=1)
    if values is None:
        values = generate_values(spec)
    return MapOutcome(np.ascontiguousarray(chosen), values, spec.k)


def subfiles_shared_by(outcome: MapOutcome, server_set, rk: int | None = None) -> int:
    """Number of subfiles whose mapper set is exactly ``server_set``."""
    server_set = set(server_set)
    expected = outcome.rk if rk is None else rk
    if len(server_set) != expected:
        raise BadSetSize(f"expected {expected} servers, got {len(server_set)}")
    return int(np.count_nonzero(outcome.masks == np.uint64(server_mask(server_set))))


@dataclass(frozen=True)
class TimingModel:
    mu: float
    pn: float

    def __post_init__(self):
        if not (self.mu > 0 and self.pn > 0):
            raise ValueError("mu and pN must be positive")

    @property
    def rate(self) -> float:
        """Per-task exponential rate mu / (pN)."""
        return self.mu / self.pn

    @classmethod
    def from_spec(cls, spec: JobSpec) -> TimingModel:
        return cls(mu=float(spec.mu), pn=spec.pk * spec.n / spec.k)


def _check_time(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise NegativeTime("processing time must be nonnegative")
    return s


def _scalar_or_array(x, like):
    return float(x) if np.ndim(like) == 0 else x


def pdf_subfile_time(t: TimingModel, spec: JobSpec, s):
    """Density of a subfile's completion time S_n (the rK-th of pK)."""
    x = _check_time(s)
    lam = t.rate
    coef = spec.k / spec.n * t.mu * comb(spec.pk - 1, spec.rk - 1)
    val = coef * (-np.expm1(-lam * x)) ** (spec.rk - 1) * np.exp(-lam * (spec.pk - spec.rk + 1) * x)
    return _scalar_or_array(val, s)


def cdf_subfile_time(t: TimingModel, spec: JobSpec, s):
    """Distribution function of S_n via the alternating binomial sum."""
    x = _check_time(s)
    lam = t.rate
    pk, rk = spec.pk, spec.rk
    lead = pk * comb(pk - 1, rk - 1)
    terms = []
    for j in range(rk):
        c = lead * comb(rk - 1, j) * (-1) ** (rk - 1 - j) / (pk - j)
        terms.append(c * -np.expm1(-lam * (pk - j) * x))
    val = np.sum(terms, axis=0)
    if np.any(val < -CDF_TOL) or np.any(val > 1 + CDF_TOL):
        raise ArithmeticError("cdf cancellation error exceeds tolerance")
    val = np.clip(val, 0.0, 1.0)
    return _scalar_or_array(val, s)


def mean_subfile_time(t: TimingModel, spec: JobSpec) -> float:
    """E{S_n} = (pN / mu) * sum_{j=1}^{rK} 1 / (pK + 1 - j)."""
    h = math.fsum(1.0 / (spec.pk + 1 - j) for j in range(1, spec.rk + 1))
    return h / t.rate


def truncation_point(t: TimingModel, spec: JobSpec, n: int | None = None) -> float:
    """A time beyond which 1 - F_{S_n}(s)^N is below TAIL_MASS.

    Uses 1 - F^N <= N (1 - F) and the union bound over which
    pK - rK + 1 tasks are still running.
    """
    n = spec.n if n is None else n
    m = spec.pk - spec.rk + 1
    return math.log(comb(spec.pk, m) * n / TAIL_MASS) / (t.rate * m)


def mean_overall_time(t: TimingModel, spec: JobSpec, n: int | None = None) -> float:
    """E{S} = integral of 1 - F_{S_n}(s)^N over [0, inf), S = max_n S_n."""
    n = spec.n if n is None else n
    hi = truncation_point(t, spec, n)

    def tail(s):
        return 1.0 - cdf_subfile_time(t, spec, s) ** n

    # split at the median of S so the adaptive rule sees the steep part
    mid = optimize.brentq(lambda s: tail(s) - 0.5, 0.0, hi, xtol=1e-12 * hi)
    total = 0.0
    err = 0.0
    for a, b in ((0.0, mid), (mid, hi)):
        res = integrate.quad(
            tail, a, b, epsabs=0.0, epsrel=QUAD_RTOL / 10, limit=200, full_output=True
        )
        if len(res) > 3:
            raise QuadratureFailure(res[3])
        val, abserr = res[0], res[1]
        total += val
        err += abserr
    if not err <= QUAD_RTOL * total:
        raise QuadratureFailure(f"E{{S}} error estimate {err:.3g} exceeds tolerance")
    return total
