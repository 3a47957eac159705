"""Closed-form communication loads, cut-set lower bounds and gains.

Everything is evaluated in exact rational arithmetic and converted to float
at the boundary, so floor(K/s) and ratios like 3600/7 carry no rounding
until the caller sees them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .errors import DegenerateBound
from .model import JobSpec

GAP_CONSTANT = 3 + math.sqrt(5)


def _qn(spec):
    return Fraction(spec.q * spec.n)


def load_conventional_exact(spec: JobSpec) -> Fraction:
    return _qn(spec) * (1 - Fraction(1, spec.k))


def load_uncoded_exact(spec: JobSpec) -> Fraction:
    return _qn(spec) * (1 - spec.r)


def load_cmr_exact(spec: JobSpec) -> Fraction:
    """Asymptotic coded load QN/K (1/r - 1); the o(N) term is left out."""
    return _qn(spec) / spec.k * (1 / spec.r - 1)


def load_conventional(spec: JobSpec) -> float:
    return float(load_conventional_exact(spec))


def load_uncoded(spec: JobSpec) -> float:
    return float(load_uncoded_exact(spec))


def load_cmr(spec: JobSpec) -> float:
    return float(load_cmr_exact(spec))


def lower_bound_first_exact(spec: JobSpec) -> Fraction:
    if spec.k == 1:
        return Fraction(0)
    return _qn(spec) * (1 - spec.r) / (spec.k - 1)


def lower_bound_second_exact(spec: JobSpec) -> tuple[Fraction, int]:
    """max over s of s Q N (1/K - r / floor(K/s)), with the smallest maximiser."""
    best, best_s = None, None
    for s in range(1, spec.k + 1):
        blocks = spec.k // s
        val = s * _qn(spec) * (Fraction(1, spec.k) - spec.r / blocks)
        if best is None or val > best:
            best, best_s = val, s
    return best, best_s


def lower_bound_exact(spec: JobSpec) -> tuple[Fraction, int]:
    first = lower_bound_first_exact(spec)
    second, s_star = lower_bound_second_exact(spec)
    return max(first, second, Fraction(0)), s_star


def lower_bound(spec: JobSpec) -> tuple[float, int]:
    """Best of the two cut-set bounds on L*(r), and the maximising s of the
    second one."""
    value, s_star = lower_bound_exact(spec)
    return float(value), s_star


def gap_ratio(spec: JobSpec) -> float:
    """L_CMR / lower bound; raises DegenerateBound when the bound is zero."""
    lb, _ = lower_bound_exact(spec)
    if lb == 0:
        raise DegenerateBound(f"lower bound is zero for rK={spec.rk}, K={spec.k}")
    return float(load_cmr_exact(spec) / lb)


def gains(spec: JobSpec) -> tuple[float, float, float]:
    """(repetition, coding, overall) gains of the coded scheme over the
    conventional one. Repetition gain is infinite at r = 1."""
    coding = Fraction(spec.rk)
    if spec.r == 1:
        return math.inf, float(coding), math.inf
    repetition = (1 - Fraction(1, spec.k)) / (1 - spec.r)
    return float(repetition), float(coding), float(repetition * coding)


@dataclass(frozen=True)
class BoundsReport:
    l_conv: float
    l_uncoded: float
    l_cmr_asymptotic: float
    lower_cutset1: float
    lower_cutset2: float
    lower_max: float
    repetition_gain: float
    coding_gain: float
    overall_gain: float
    gap_ratio: float
    s_star: int

    def to_dict(self) -> dict:
        d = asdict(self)
        # JSON has no infinity; degenerate ratios become null
        return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def bounds_report(spec: JobSpec) -> BoundsReport:
    first = lower_bound_first_exact(spec)
    second, s_star = lower_bound_second_exact(spec)
    rep, cod, overall = gains(spec)
    try:
        gap = gap_ratio(spec)
    except DegenerateBound:
        gap = math.inf
    return BoundsReport(
        l_conv=load_conventional(spec),
        l_uncoded=load_uncoded(spec),
        l_cmr_asymptotic=load_cmr(spec),
        lower_cutset1=float(first),
        lower_cutset2=float(second),
        lower_max=float(max(first, second, Fraction(0))),
        repetition_gain=rep,
        coding_gain=cod,
        overall_gain=overall,
        gap_ratio=gap,
        s_star=s_star,
    )
