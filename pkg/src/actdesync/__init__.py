"""Timing side-channel simulator for neural-network activation functions,
with a random-delay countermeasure, TVLA leakage assessment, an activation
distinguisher and a deployment overhead model."""

__version__ = "0.1.0"

from .activation import ActivationKind, evaluate, evaluate_array
from .countermeasure import (
    LONG_DELAY,
    REFERENCE_DELAY,
    CalibrationReport,
    DelayDistribution,
    calibrate,
    find_clusters,
    order_of_magnitude,
    protect_trace,
    sample_delay,
    sample_delays,
)
from .leakage import DistinguisherVerdict, TvlaResult, accuracy_sweep, distinguish, tvla_campaign, welch_t
from .overhead import NetworkCostModel, OverheadReport, neuron_time_range, overhead_report, vgg19_classifier
from .timing import (
    TimingCluster,
    TimingProfile,
    TimingTrace,
    capture_trace,
    measure_host_time,
    read_trace,
    reference_profiles,
    sample_time,
    write_trace,
)

__all__ = [
    "ActivationKind",
    "CalibrationReport",
    "DelayDistribution",
    "DistinguisherVerdict",
    "LONG_DELAY",
    "NetworkCostModel",
    "OverheadReport",
    "REFERENCE_DELAY",
    "TimingCluster",
    "TimingProfile",
    "TimingTrace",
    "TvlaResult",
    "accuracy_sweep",
    "calibrate",
    "capture_trace",
    "distinguish",
    "evaluate",
    "evaluate_array",
    "find_clusters",
    "measure_host_time",
    "neuron_time_range",
    "order_of_magnitude",
    "overhead_report",
    "protect_trace",
    "read_trace",
    "reference_profiles",
    "sample_delay",
    "sample_delays",
    "sample_time",
    "tvla_campaign",
    "vgg19_classifier",
    "welch_t",
    "write_trace",
]
