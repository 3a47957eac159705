"""Bit-exact simulator for coded multicast shuffling in MapReduce."""

from .analysis import bounds_report, gap_ratio, gains, load_cmr, load_conventional, load_uncoded, lower_bound
from .assignment import assign, assign_batch, assign_conventional, assign_naive
from .experiment import run_job
from .mapexec import TimingModel, execute_maps, mean_overall_time, mean_subfile_time
from .model import (
    Assignment,
    JobSpec,
    MapOutcome,
    ReducerDistribution,
    canonical_reducers,
    random_reducers,
    spec_from_fractions,
    validate_spec,
)
from .shuffle import ShuffleTranscript, decode_all, measured_load, shuffle, verify_decoded

__version__ = "0.1.0"
