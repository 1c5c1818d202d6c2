"""Exception taxonomy shared across the toolkit.

Three broad families map onto CLI exit codes: configuration errors (2),
data errors (3), and numerical failures (4).
"""

from __future__ import annotations


class ArtikitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ArtikitError):
    """Invalid configuration, spec file, or CLI arguments."""

    exit_code = 2


class DataError(ArtikitError):
    """Malformed, inconsistent, or insufficient input data."""

    exit_code = 3


class NumericalError(ArtikitError):
    """A numerical routine failed to produce a usable result."""

    exit_code = 4


# --- ema-core ---

class DegenerateClip(DataError):
    """Clip too short to normalize (fewer than 2 frames)."""


class ZeroVarianceChannel(DataError):
    """A channel is constant within the clip and cannot be standardized."""

    def __init__(self, channel: str, message: str | None = None):
        self.channel = channel
        super().__init__(message or f"channel {channel} has zero variance within the clip")


class CutoffAboveNyquist(DataError):
    """Low-pass cutoff at or above half the frame rate."""


class ClipTooShortForFilter(DataError):
    """Clip shorter than the zero-phase filter can handle."""


class EmptyOverlap(DataError):
    """Feature and EMA streams share no time support."""


class BadMagic(DataError):
    """File does not start with the AKF magic bytes."""


class UnsupportedVersion(DataError):
    """AKF file with an unrecognized format version."""


class TruncatedPayload(DataError):
    """AKF payload shorter than the header promises."""


class DimensionMismatch(DataError):
    """AKF header dimensions inconsistent with the payload."""


# --- acoustic-baselines ---

class ClipTooShort(DataError):
    """Audio clip shorter than one analysis window."""


class SampleRateMismatch(DataError):
    """Audio sample rate differs from the configured rate."""


# --- linalg-solvers ---

class SingularDesign(NumericalError):
    """Unregularized normal equations are rank-deficient; retry with ridge > 0."""


class ShapeMismatch(NumericalError):
    """Operands have incompatible shapes."""


class NotConvergedWarning(RuntimeWarning):
    """Coordinate descent hit max_iter with KKT residual above tolerance."""


# --- probing ---

class ZeroVarianceInput(DataError):
    """Correlation requested for a constant vector."""


class TooFewUtterances(DataError):
    """Fewer utterances than cross-validation folds."""


class InconsistentCoverage(DataError):
    """An utterance is missing from some feature source in a layer sweep."""


# --- alignment ---

class SourceMismatch(DataError):
    """Probes being aligned were fit on different feature sources."""


class EmptyGroupPair(DataError):
    """No ordered speaker pair exists for a group pair."""


# --- stats ---

class TooFewPairs(DataError):
    """Paired test requires at least 3 pairs."""


class EmptyCell(DataError):
    """A within/across partition cell contributes no speaker pairs."""


# --- synth-oracle ---

class InvalidSpec(ConfigError):
    """Synthetic data spec violates its invariants."""


# --- cli-reports ---

class InvalidReport(DataError):
    """Report bundle is incomplete or empty where data is required."""
