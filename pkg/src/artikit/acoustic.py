"""Baseline acoustic features from raw audio: filter bank, mel spectrogram, MFCC.

Front-end defaults follow common speech practice: 25 ms Hann windows with a
20 ms hop (so baselines share the frame grid of 20 ms learned features),
80 mel bands on the HTK mel scale, 13 cepstra with deltas appended.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.fft
from scipy.io import wavfile

from .core import FeatureMatrix
from .errors import ClipTooShort, DataError, SampleRateMismatch

LOG_FLOOR = 1e-10


@dataclass(frozen=True)
class AudioClip:
    """Mono audio, samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"audio must be mono 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DataError("audio contains non-finite samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class MelConfig:
    n_fft: int = 400            # 25 ms at 16 kHz
    hop: int = 320              # 20 ms at 16 kHz
    n_mels: int = 80
    n_mfcc: int = 13
    fmin: float = 0.0
    fmax: float = 8000.0
    window: str = "hann"
    add_deltas: bool = True     # append delta and delta-delta to MFCC

    def validate(self, sample_rate: int) -> None:
        if not (0 <= self.fmin < self.fmax <= sample_rate / 2):
            raise DataError(
                f"need 0 <= fmin < fmax <= {sample_rate / 2}, got "
                f"fmin={self.fmin}, fmax={self.fmax}")
        if self.n_mfcc > self.n_mels:
            raise DataError(f"n_mfcc {self.n_mfcc} exceeds n_mels {self.n_mels}")
        if self.window != "hann":
            raise DataError(f"unsupported window {self.window!r}")


def load_wav(path: str | Path, expected_rate: int = 16000) -> AudioClip:
    """Read a PCM WAV file (16-bit or float32); other rates are an error."""
    rate, data = wavfile.read(path)
    if rate != expected_rate:
        raise SampleRateMismatch(
            f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz "
            "(resampling is out of scope)")
    if data.ndim != 1:
        raise DataError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise DataError(f"{path}: unsupported WAV sample format {data.dtype}")
    return AudioClip(samples=samples, sample_rate=rate)


def _hann(n: int) -> np.ndarray:
    # periodic Hann, the STFT convention
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _frame(samples: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    n_frames = 1 + (len(samples) - n_fft) // hop
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def stft_power(clip: AudioClip, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    """Hann-windowed magnitude-squared spectrogram.

    T_f = 1 + floor((len - n_fft) / hop), D = n_fft / 2 + 1.

    Raises:
        ClipTooShort: fewer samples than one analysis window.
    """
    cfg.validate(clip.sample_rate)
    if len(clip.samples) < cfg.n_fft:
        raise ClipTooShort(
            f"clip has {len(clip.samples)} samples, window needs {cfg.n_fft}")
    frames = _frame(clip.samples, cfg.n_fft, cfg.hop) * _hann(cfg.n_fft)
    spec = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    return FeatureMatrix(speaker_id="", utterance_id="", source="stft-power",
                         frame_hop=cfg.hop / clip.sample_rate, values=spec)


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_bank(sample_rate: int, cfg: MelConfig) -> np.ndarray:
    """Triangular mel filters (n_mels x n_fft/2+1), unit area per filter.

    Edges are spaced uniformly on the HTK mel scale; triangles are linear in
    Hz between their edge frequencies and scaled by 2 / (f_hi - f_lo) so each
    filter integrates to one.
    """
    n_bins = cfg.n_fft // 2 + 1
    bin_freqs = np.arange(n_bins) * sample_rate / cfg.n_fft
    edges = mel_to_hz(np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax),
                                  cfg.n_mels + 2))
    bank = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        up = (bin_freqs - lo) / (center - lo)
        down = (hi - bin_freqs) / (hi - center)
        bank[m] = np.maximum(0.0, np.minimum(up, down)) * (2.0 / (hi - lo))
    return bank


def mel_spectrogram(clip: AudioClip, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    """Mel filter bank applied to the power spectrogram."""
    power = stft_power(clip, cfg)
    bank = mel_filter_bank(clip.sample_rate, cfg)
    return replace(power.with_values(power.values @ bank.T), source="mel")


def log_filter_bank(clip: AudioClip, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    """Natural log of mel energies, floored at 1e-10."""
    mel = mel_spectrogram(clip, cfg)
    return replace(mel.with_values(np.log(np.maximum(mel.values, LOG_FLOOR))),
                   source="fbank")


def _delta(x: np.ndarray, width: int = 2) -> np.ndarray:
    # regression delta over +/- width frames, edge frames clamped
    denom = 2.0 * sum(i * i for i in range(1, width + 1))
    padded = np.concatenate([x[:1].repeat(width, axis=0), x,
                             x[-1:].repeat(width, axis=0)])
    out = np.zeros_like(x)
    for i in range(1, width + 1):
        out += i * (padded[width + i:len(padded) - width + i]
                    - padded[width - i:len(padded) - width - i])
    return out / denom


def mfcc(clip: AudioClip, cfg: MelConfig = MelConfig()) -> FeatureMatrix:
    """Orthonormal DCT-II of the log filter bank, first n_mfcc coefficients.

    With ``cfg.add_deltas`` the delta and delta-delta of the cepstra are
    appended (default D = 39).
    """
    fbank = log_filter_bank(clip, cfg)
    cep = scipy.fft.dct(fbank.values, type=2, norm="ortho", axis=1)[:, :cfg.n_mfcc]
    if cfg.add_deltas:
        cep = np.hstack([cep, _delta(cep), _delta(_delta(cep))])
    return replace(fbank.with_values(cep), source="mfcc")


BASELINES = {
    "fbank": log_filter_bank,
    "mel": mel_spectrogram,
    "mfcc": mfcc,
}
