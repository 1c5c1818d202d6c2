"""Error taxonomy for extraction and corpus conversion.

Job-level problems raise; per-file problems during batch extraction are
caught by the batch loop, logged, and skipped.
"""


class ExtractorError(Exception):
    """Base class for all extraction/conversion errors."""


class ModelLoadError(ExtractorError):
    """Checkpoint missing, unreadable, or unsuitable (wrong frame hop)."""


class InvalidJob(ExtractorError):
    """Job description is inconsistent (bad layer indices, missing keys)."""


class SampleRateMismatch(ExtractorError):
    """Audio is not at the model's 16 kHz rate and resampling is off."""


class InvalidAudio(ExtractorError):
    """Audio unusable for extraction (empty, non-mono, non-finite)."""


class UnknownLayout(ExtractorError):
    """Corpus directory does not match the documented published layout."""


class MissingChannel(ExtractorError):
    """A required articulator sensor is absent from a corpus file."""
