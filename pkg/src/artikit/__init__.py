"""artikit: articulatory probing and cross-speaker transfer analysis.

Tools for recovering 12-channel articulatory kinematics from frame-level
speech features with linear probes, measuring how well those per-speaker
systems map onto each other through sparse affine alignments, and testing
group structure in the resulting transferability matrices.
"""

from .akf import read_akf, read_manifest, write_akf, write_manifest
from .core import (
    CANONICAL_CHANNELS,
    CHANNEL_NAMES,
    N_CHANNELS,
    ArticulatorChannel,
    EmaTrajectory,
    FeatureMatrix,
    Gender,
    Group,
    SpeakerMeta,
    align_frames,
    lowpass_filter,
    normalize_ema,
)
from .errors import ArtikitError, ConfigError, DataError, NumericalError
from .pipeline import NormalizationOrder, RunConfig, RunResult, run_full_pipeline
from .probing import CvPlan, InversionProbe, ProbeConfig, fit_probe, layer_sweep
from .alignment import (
    AffineAlignment,
    TrainMode,
    TrainTestSplit,
    fit_alignment,
    transferability_matrix,
)
from .solvers import AffineMap, LassoConfig, apply, compose, fit_lasso, fit_least_squares
from .stats import TestKind, paired_test, welch_test, within_across
from .synth import GroupSpec, SynthSpec, generate

__version__ = "1.0.0"

__all__ = [
    "__version__",
    "AffineAlignment", "AffineMap", "ArticulatorChannel", "ArtikitError",
    "CANONICAL_CHANNELS", "CHANNEL_NAMES", "ConfigError", "CvPlan",
    "DataError", "EmaTrajectory", "FeatureMatrix", "Gender", "Group",
    "GroupSpec", "InversionProbe", "LassoConfig", "N_CHANNELS",
    "NormalizationOrder", "NumericalError", "ProbeConfig", "RunConfig",
    "RunResult", "SpeakerMeta", "SynthSpec", "TestKind", "TrainMode",
    "TrainTestSplit", "align_frames", "apply", "compose", "fit_alignment",
    "fit_lasso", "fit_least_squares", "fit_probe", "generate", "layer_sweep",
    "lowpass_filter", "normalize_ema", "paired_test", "read_akf",
    "read_manifest", "run_full_pipeline", "transferability_matrix",
    "welch_test", "within_across", "write_akf", "write_manifest",
]
