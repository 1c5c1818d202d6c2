"""Companion package: SSL feature extraction and EMA corpus conversion.

Produces the AKF feature/EMA files and manifests that the artikit analysis
toolkit consumes; it talks to artikit only through those interchange
formats and artikit's public IO/vocabulary API.
"""

from .convert import LAYOUTS, ConversionResult, convert_corpus
from .errors import (
    ExtractorError,
    InvalidAudio,
    InvalidJob,
    MissingChannel,
    ModelLoadError,
    SampleRateMismatch,
    UnknownLayout,
)
from .extract import ExtractorJob, ExtractReport, extract, load_model

__version__ = "1.0.0"

__all__ = [
    "LAYOUTS",
    "ConversionResult",
    "convert_corpus",
    "ExtractorError",
    "InvalidAudio",
    "InvalidJob",
    "MissingChannel",
    "ModelLoadError",
    "SampleRateMismatch",
    "UnknownLayout",
    "ExtractorJob",
    "ExtractReport",
    "extract",
    "load_model",
    "__version__",
]
