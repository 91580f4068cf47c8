"""Small-space estimation of a data stream's frequency-of-frequencies profile."""

__version__ = "0.1.0"

from .distinct import KmvSketch, TrackingDistinct, distinct_estimate, distinct_update
from .estimator import (
    EstimatedProfile,
    SampledProfile,
    SaturationWarning,
    dm_compressed,
    dm_estimate,
    finalize,
)
from .harness import StreamSpec, exact_profile, generate_stream, run_trials
from .invert import estimate_sample_size, invert_counts, rhat_bruteforce
from .sketch import ErrorType, SketchConfig, SketchState, bucket_stats, sketch_new

__all__ = [
    "EstimatedProfile", "ErrorType", "KmvSketch", "SampledProfile", "SaturationWarning",
    "SketchConfig", "SketchState", "StreamSpec", "TrackingDistinct", "bucket_stats",
    "distinct_estimate", "distinct_update", "dm_compressed", "dm_estimate",
    "estimate_sample_size", "exact_profile", "finalize", "generate_stream",
    "invert_counts", "rhat_bruteforce", "run_trials", "sketch_new",
]
