"""Canonical data model for EMA trajectories and feature matrices.

Twelve articulatory channels (six sensors x two midsagittal axes) in a fixed
canonical order, plus the frame-level operations every later stage relies on:
per-clip standardization, zero-phase low-pass filtering, and resampling EMA
onto the feature frame grid.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import (
    ClipTooShortForFilter,
    CutoffAboveNyquist,
    DataError,
    DegenerateClip,
    EmptyOverlap,
    ZeroVarianceChannel,
)


class Articulator(enum.Enum):
    LI = "LI"   # lower incisor
    UL = "UL"   # upper lip
    LL = "LL"   # lower lip
    TT = "TT"   # tongue tip
    TB = "TB"   # tongue blade
    TD = "TD"   # tongue dorsum


class Axis(enum.Enum):
    X = "X"     # front-back
    Y = "Y"     # up-down


@dataclass(frozen=True)
class ArticulatorChannel:
    articulator: Articulator
    axis: Axis

    @property
    def name(self) -> str:
        return f"{self.articulator.value}.{self.axis.value}"

    @classmethod
    def from_name(cls, name: str) -> "ArticulatorChannel":
        art, _, axis = name.partition(".")
        try:
            return cls(Articulator(art), Axis(axis))
        except ValueError:
            raise DataError(f"unknown channel name {name!r}") from None


CANONICAL_CHANNELS: tuple[ArticulatorChannel, ...] = tuple(
    ArticulatorChannel(art, axis)
    for art in (Articulator.LI, Articulator.UL, Articulator.LL,
                Articulator.TT, Articulator.TB, Articulator.TD)
    for axis in (Axis.X, Axis.Y)
)

CHANNEL_NAMES: tuple[str, ...] = tuple(c.name for c in CANONICAL_CHANNELS)

N_CHANNELS = 12


class Group(enum.Enum):
    """Language-dialect cohorts."""

    EN_UK = "EN.UK"
    EN_US = "EN.US"
    EN_BJ = "EN.BJ"
    EN_SH = "EN.SH"
    MAN = "MAN"
    IT = "IT"


class Gender(enum.Enum):
    M = "M"
    F = "F"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SpeakerMeta:
    speaker_id: str
    corpus: str
    group: Group
    gender: Gender = Gender.UNKNOWN
    minutes: float = 0.0


@dataclass(frozen=True)
class EmaTrajectory:
    """Time series of the 12 articulatory channels for one utterance.

    ``samples`` is T x 12; channel c of column i is ``channel_order[i]``.
    Values are immutable after construction (arrays are marked read-only),
    so trajectories are safe to share across parallel workers.
    """

    speaker_id: str
    utterance_id: str
    frame_rate: float
    samples: np.ndarray
    channel_order: tuple[ArticulatorChannel, ...] = CANONICAL_CHANNELS

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2 or samples.shape[1] != N_CHANNELS:
            raise DataError(
                f"EMA samples must be T x {N_CHANNELS}, got shape {samples.shape}")
        if samples.shape[0] < 1:
            raise DataError("EMA trajectory needs at least one frame")
        if self.frame_rate <= 0:
            raise DataError(f"frame_rate must be positive, got {self.frame_rate}")
        if sorted(c.name for c in self.channel_order) != sorted(CHANNEL_NAMES):
            raise DataError("channel_order must be a permutation of the 12 canonical channels")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "channel_order", tuple(self.channel_order))

    @property
    def n_frames(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.n_frames / self.frame_rate

    def frame_times(self) -> np.ndarray:
        """Sample times; each frame represents the center of its interval."""
        return (np.arange(self.n_frames) + 0.5) / self.frame_rate

    def in_canonical_order(self) -> "EmaTrajectory":
        """Reorder columns into the canonical channel order."""
        if self.channel_order == CANONICAL_CHANNELS:
            return self
        index = {c.name: i for i, c in enumerate(self.channel_order)}
        perm = [index[name] for name in CHANNEL_NAMES]
        return replace(self, samples=self.samples[:, perm],
                       channel_order=CANONICAL_CHANNELS)

    def with_samples(self, samples: np.ndarray) -> "EmaTrajectory":
        return replace(self, samples=samples)


@dataclass(frozen=True)
class FeatureMatrix:
    """Frame-aligned representation matrix (T_f x D) from one feature source."""

    speaker_id: str
    utterance_id: str
    source: str
    frame_hop: float
    values: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"feature values must be 2-D, got shape {values.shape}")
        if values.shape[1] < 1:
            raise DataError("feature dimension must be at least 1")
        if not np.all(np.isfinite(values)):
            raise DataError(
                f"non-finite feature values in {self.speaker_id}/{self.utterance_id}")
        if self.frame_hop <= 0:
            raise DataError(f"frame_hop must be positive, got {self.frame_hop}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def frame_times(self) -> np.ndarray:
        """Frame center times: t_k = k * hop + hop / 2."""
        return (np.arange(self.n_frames) + 0.5) * self.frame_hop

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return replace(self, values=values)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def normalize_ema(traj: EmaTrajectory) -> EmaTrajectory:
    """Standardize each channel to zero mean and unit variance within the clip.

    Uses the population standard deviation (divide by T), so a repeated
    application is a no-op up to rounding.

    Raises:
        DegenerateClip: fewer than 2 frames.
        ZeroVarianceChannel: a channel is constant within the clip.
    """
    x = traj.samples
    if x.shape[0] < 2:
        raise DegenerateClip(
            f"{traj.speaker_id}/{traj.utterance_id}: need T >= 2 frames, got {x.shape[0]}")
    mean = x.mean(axis=0)
    std = x.std(axis=0)          # population std, ddof=0
    # ptp catches constant channels whose std rounds to a nonzero subnormal
    bad = np.flatnonzero((std == 0.0) | (np.ptp(x, axis=0) == 0.0))
    if bad.size:
        raise ZeroVarianceChannel(traj.channel_order[bad[0]].name)
    return traj.with_samples((x - mean) / std)


FILTER_ORDER = 5


def lowpass_filter(traj: EmaTrajectory, cutoff: float = 6.0) -> EmaTrajectory:
    """Zero-phase low-pass Butterworth filter, applied per channel.

    Order-5 design, run forward and backward (no phase shift), with odd
    reflective edge padding of length 3 * (order + 1) as in the standard
    forward-backward recipe. Output length equals input length.

    Raises:
        CutoffAboveNyquist: cutoff at or beyond frame_rate / 2.
        ClipTooShortForFilter: T <= 3 * filter order.
    """
    if cutoff >= traj.frame_rate / 2:
        raise CutoffAboveNyquist(
            f"cutoff {cutoff} Hz >= Nyquist {traj.frame_rate / 2} Hz")
    n = traj.n_frames
    if n <= 3 * FILTER_ORDER:
        raise ClipTooShortForFilter(
            f"{traj.speaker_id}/{traj.utterance_id}: T={n} too short for order-{FILTER_ORDER} "
            f"zero-phase filtering (need T > {3 * FILTER_ORDER})")
    b, a = butter(FILTER_ORDER, cutoff, btype="low", fs=traj.frame_rate)
    padlen = min(3 * (FILTER_ORDER + 1), n - 1)
    out = filtfilt(b, a, traj.samples, axis=0, padtype="odd", padlen=padlen)
    return traj.with_samples(out)


def align_frames(traj: EmaTrajectory, feat: FeatureMatrix
                 ) -> tuple[EmaTrajectory, FeatureMatrix]:
    """Resample EMA by linear interpolation onto the feature frame centers.

    Feature frames whose centers fall past the end of the EMA stream are
    truncated; output streams have identical frame counts. A feature center
    slightly before the first EMA sample time is clamped to the first value.

    Raises:
        EmptyOverlap: the streams share no time support.
    """
    t_feat = feat.frame_times()
    t_ema = traj.frame_times()
    keep = t_feat <= t_ema[-1] + 1e-9
    n_keep = int(np.count_nonzero(keep))
    if n_keep == 0 or t_feat[0] > t_ema[-1] + 1e-9:
        raise EmptyOverlap(
            f"{traj.speaker_id}/{traj.utterance_id}: feature frames start after EMA ends")
    t_out = t_feat[:n_keep]
    resampled = np.empty((n_keep, N_CHANNELS), dtype=np.float64)
    for c in range(N_CHANNELS):
        resampled[:, c] = np.interp(t_out, t_ema, traj.samples[:, c])
    ema_out = replace(traj, frame_rate=1.0 / feat.frame_hop, samples=resampled)
    feat_out = feat.with_values(feat.values[:n_keep])
    return ema_out, feat_out
