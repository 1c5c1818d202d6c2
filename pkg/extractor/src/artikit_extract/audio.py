"""WAV loading at the 16 kHz mono contract, with an optional resampler."""

import math
from pathlib import Path

import numpy as np
import scipy.io.wavfile
import scipy.signal

from .errors import InvalidAudio, SampleRateMismatch

TARGET_RATE = 16000


def load_wav_16k(path: str | Path, resample: bool = False) -> np.ndarray:
    """Load a mono WAV as float32 at 16 kHz.

    Integer PCM is scaled to [-1, 1]. Other sample rates raise
    SampleRateMismatch unless ``resample`` is set, in which case a
    polyphase rational resampler brings the clip to 16 kHz. Stereo input
    is rejected (the extraction contract is mono).
    """
    rate, data = scipy.io.wavfile.read(path)
    if data.ndim != 1:
        raise InvalidAudio(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        x = data.astype(np.float32) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float32) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        x = data.astype(np.float32)
    else:
        raise InvalidAudio(f"{path}: unsupported sample format {data.dtype}")
    if rate != TARGET_RATE:
        if not resample:
            raise SampleRateMismatch(
                f"{path}: {rate} Hz audio, need {TARGET_RATE} Hz "
                f"(pass resample=True to convert)")
        if x.size:
            g = math.gcd(TARGET_RATE, int(rate))
            x = scipy.signal.resample_poly(
                x.astype(np.float64), TARGET_RATE // g, int(rate) // g
            ).astype(np.float32)
    if x.size and not np.isfinite(x).all():
        raise InvalidAudio(f"{path}: audio contains non-finite samples")
    return x
