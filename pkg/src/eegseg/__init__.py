"""Segment-duration study toolkit for EEG subject identification.

Typical use::

    from eegseg import SynthSpec, generate_synthetic_dataset, run_sweep, detect_knee
    curves = run_sweep(generate_synthetic_dataset(SynthSpec(seed=1)))
"""
__version__ = "0.1.0"

from .features import FEATURE_NAMES, FeatureParams, feature_matrix
from .signal import (Dataset, DatasetError, Recording, Segment, SynthSpec, bandpass_filter,
                     default_duration_grid, generate_synthetic_dataset, load_dataset,
                     segment_recording, write_dataset)
from .sweep import (AccuracyCurve, KneeResult, compare_to_reference, derivative_curve,
                    detect_knee, normalize_curve, pearson_correlation, pooled_curve, run_sweep)

__all__ = [
    "FEATURE_NAMES", "AccuracyCurve", "Dataset", "DatasetError", "FeatureParams", "KneeResult",
    "Recording", "Segment", "SynthSpec", "__version__", "bandpass_filter", "compare_to_reference",
    "default_duration_grid", "derivative_curve", "detect_knee", "feature_matrix",
    "generate_synthetic_dataset", "load_dataset", "normalize_curve", "pearson_correlation",
    "pooled_curve", "run_sweep", "segment_recording", "write_dataset",
]
