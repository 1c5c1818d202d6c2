"""Synthetic multi-speaker articulatory data with known ground truth.

The generative story mirrors the working hypothesis of the analysis: all
speakers share a canonical 12-channel latent kinematic process z(t);
features observe z through a shared full-rank lift, while each speaker's
EMA observes it through a private invertible anatomy affine, optionally
composed with a group-level latent distortion (the "dialect" knob). With
everything affine and band-limited, probe correlations and ideal
cross-speaker alignments have closed forms, so pipeline claims can be
tested against exact expectations.

Latent signals are sums of sinusoids below the low-pass band edge and are
whitened per clip (exact zero mean, identity covariance), which makes
per-clip EMA normalization coincide with the global normalization of the
noiseless system.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .akf import write_akf, write_manifest
from .core import (
    CANONICAL_CHANNELS,
    EmaTrajectory,
    FeatureMatrix,
    Gender,
    Group,
    N_CHANNELS,
    SpeakerMeta,
)
from .errors import InvalidSpec
from .solvers import AffineMap

MAX_ANATOMY_CONDITION = 100.0


@dataclass(frozen=True)
class GroupSpec:
    """One synthetic cohort: a group label plus its latent distortion.

    ``distortion`` may be an explicit 12 x 12 matrix; otherwise strength
    s > 0 samples a random orthogonal pair U, V and sets
    D = U diag(sigma) V^T with singular values log-spaced over
    [10^-s, 10^s], so the distortion's condition number is exactly
    10^(2s) regardless of seed (strength 0 keeps the identity, i.e. no
    dialect effect). Within a group the distortion cancels out of ideal
    alignments; across groups it makes them ill-conditioned.
    """

    label: str
    distortion_strength: float = 0.0
    distortion: np.ndarray | None = None


@dataclass(frozen=True)
class SynthSpec:
    n_speakers: int = 6
    groups: tuple[GroupSpec, ...] = (GroupSpec("EN.UK"),)
    frames_per_utt: int = 250            # 5 s at 50 Hz
    utts_per_speaker: int = 10
    feature_dim: int = 64
    noise_sigma: float = 0.0             # EMA sensor noise, per channel
    anatomy_scale_range: tuple[float, float] = (0.7, 1.4)
    seed: int = 0
    # generation details
    frame_rate: float = 50.0
    feature_noise_sigma: float = 1e-3
    anatomy_mode: str = "blocks"         # "blocks" (per-articulator 2x2) or "full"
    max_sinusoids: int = 6
    freq_range: tuple[float, float] = (0.25, 3.5)   # Hz, transparent to 6 Hz filter

    def validate(self) -> None:
        lo, hi = self.anatomy_scale_range
        if self.n_speakers < 1:
            raise InvalidSpec("n_speakers must be at least 1")
        if not self.groups:
            raise InvalidSpec("need at least one group")
        if len({g.label for g in self.groups}) != len(self.groups):
            raise InvalidSpec("group labels must be distinct")
        for g in self.groups:
            try:
                Group(g.label)   # must be a known language-dialect label
            except ValueError:
                raise InvalidSpec(f"unknown group label {g.label!r}") from None
        if self.feature_dim < N_CHANNELS:
            raise InvalidSpec(f"feature_dim must be >= {N_CHANNELS}")
        if self.frames_per_utt < 25:
            raise InvalidSpec("frames_per_utt must be >= 25 for per-clip whitening")
        if self.utts_per_speaker < 2:
            raise InvalidSpec("utts_per_speaker must be >= 2")
        if not (0 < lo <= hi) or hi / lo > MAX_ANATOMY_CONDITION:
            raise InvalidSpec(
                f"anatomy_scale_range {self.anatomy_scale_range} must satisfy "
                f"0 < lo <= hi and hi/lo <= {MAX_ANATOMY_CONDITION}")
        if self.noise_sigma < 0 or self.feature_noise_sigma < 0:
            raise InvalidSpec("noise sigmas must be nonnegative")
        if self.anatomy_mode not in ("blocks", "full"):
            raise InvalidSpec(f"unknown anatomy_mode {self.anatomy_mode!r}")
        f_lo, f_hi = self.freq_range
        if not (0 < f_lo < f_hi < self.frame_rate / 2):
            raise InvalidSpec(f"freq_range {self.freq_range} must lie below Nyquist")


def noise_sigma_for_corr(target: float) -> float:
    """EMA noise level giving a theoretical probe correlation of ``target``.

    Valid for unit-variance signal channels: corr = 1 / sqrt(1 + sigma^2).
    """
    if not 0 < target <= 1:
        raise InvalidSpec(f"target correlation must be in (0, 1], got {target}")
    return float(np.sqrt(1.0 / target**2 - 1.0))


@dataclass(frozen=True)
class GroundTruth:
    spec: SynthSpec
    lift: np.ndarray                                  # feature_dim x 12
    distortions: dict[str, np.ndarray]                # group label -> 12 x 12
    anatomies: dict[str, np.ndarray]                  # speaker -> 12 x 12
    offsets: dict[str, np.ndarray]                    # speaker -> 12
    groups_by_speaker: dict[str, str]
    latents: dict[tuple[str, str], np.ndarray] = field(repr=False, default_factory=dict)

    def system_matrix(self, speaker_id: str) -> np.ndarray:
        """Noiseless normalized system: column form y = A z, rows unit variance."""
        m = self.anatomies[speaker_id] @ self.distortions[self.groups_by_speaker[speaker_id]]
        row_norms = np.linalg.norm(m, axis=1)
        return m / row_norms[:, None]

    def ideal_alignment(self, source_speaker: str, target_speaker: str) -> AffineMap:
        """Ground-truth alignment between two normalized articulatory systems."""
        a = self.system_matrix(source_speaker)
        b = self.system_matrix(target_speaker)
        w_col = b @ np.linalg.inv(a)
        return AffineMap(weights=w_col.T, bias=np.zeros(N_CHANNELS),
                         training_meta={"method": "ground_truth"})

    def to_json(self) -> dict:
        return {
            "spec_seed": self.spec.seed,
            "lift": self.lift.tolist(),
            "distortions": {k: v.tolist() for k, v in self.distortions.items()},
            "anatomies": {k: v.tolist() for k, v in self.anatomies.items()},
            "offsets": {k: v.tolist() for k, v in self.offsets.items()},
            "groups_by_speaker": self.groups_by_speaker,
        }


@dataclass(frozen=True)
class SynthDataset:
    spec: SynthSpec
    speakers: list[SpeakerMeta]
    pairs_by_speaker: dict[str, list[tuple[FeatureMatrix, EmaTrajectory]]]
    ground_truth: GroundTruth

    def save(self, out_dir: str | Path, source: str = "synth") -> Path:
        """Write AKF files, a manifest, and ground_truth.json; returns manifest path."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for meta in self.speakers:
            for feat, ema in self.pairs_by_speaker[meta.speaker_id]:
                fpath = f"{feat.speaker_id}_{feat.utterance_id}_{source}.akf"
                epath = f"{ema.speaker_id}_{ema.utterance_id}_ema.akf"
                write_akf(feat, out_dir / fpath)
                write_akf(ema, out_dir / epath)
                rows.append({
                    "speaker_id": meta.speaker_id,
                    "group": meta.group.value,
                    "gender": meta.gender.value,
                    "utterance_id": feat.utterance_id,
                    "feature_path": fpath,
                    "ema_path": epath,
                })
        manifest_path = out_dir / "manifest.json"
        write_manifest(rows, manifest_path)
        (out_dir / "ground_truth.json").write_text(
            json.dumps(self.ground_truth.to_json()) + "\n")
        return manifest_path


# ---------------------------------------------------------------------------
# sampling helpers
# ---------------------------------------------------------------------------

def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _sample_anatomy(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    lo, hi = spec.anatomy_scale_range
    if spec.anatomy_mode == "blocks":
        m = np.zeros((N_CHANNELS, N_CHANNELS))
        for a in range(N_CHANNELS // 2):
            scales = rng.uniform(lo, hi, size=2)
            block = (_rotation(rng.uniform(0, 2 * np.pi)) @ np.diag(scales)
                     @ _rotation(rng.uniform(0, 2 * np.pi)))
            m[2 * a:2 * a + 2, 2 * a:2 * a + 2] = block
        return m
    u = _orthogonal(rng, N_CHANNELS)
    v = _orthogonal(rng, N_CHANNELS)
    return u @ np.diag(rng.uniform(lo, hi, size=N_CHANNELS)) @ v.T


def _sample_distortion(rng: np.random.Generator, group: GroupSpec) -> np.ndarray:
    if group.distortion is not None:
        d = np.asarray(group.distortion, dtype=np.float64)
        if d.shape != (N_CHANNELS, N_CHANNELS):
            raise InvalidSpec(f"distortion for {group.label} must be 12 x 12")
        if np.linalg.cond(d) > MAX_ANATOMY_CONDITION:
            raise InvalidSpec(
                f"distortion for {group.label} has condition number "
                f"{np.linalg.cond(d):.1f} > {MAX_ANATOMY_CONDITION}")
        return d
    s = group.distortion_strength
    if s == 0.0:
        return np.eye(N_CHANNELS)
    if not 0 < s <= 1:
        raise InvalidSpec(
            f"distortion_strength must be in [0, 1], got {s} for {group.label}")
    sigma = 10.0 ** np.linspace(-s, s, N_CHANNELS)
    return _orthogonal(rng, N_CHANNELS) @ np.diag(sigma) @ _orthogonal(rng, N_CHANNELS).T


def _latent_signals(rng: np.random.Generator, spec: SynthSpec) -> np.ndarray:
    """Band-limited latent clip, whitened to exact zero mean / identity cov."""
    t = np.arange(spec.frames_per_utt) / spec.frame_rate
    z = np.zeros((spec.frames_per_utt, N_CHANNELS))
    for c in range(N_CHANNELS):
        n_sin = rng.integers(3, spec.max_sinusoids + 1)
        freqs = rng.uniform(*spec.freq_range, size=n_sin)
        phases = rng.uniform(0, 2 * np.pi, size=n_sin)
        amps = rng.uniform(0.5, 1.0, size=n_sin)
        z[:, c] = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t
                                          + phases[:, None])).sum(axis=0)
    z -= z.mean(axis=0)
    cov = z.T @ z / len(z)
    eigval, eigvec = np.linalg.eigh(cov)
    if eigval.min() <= 1e-10 * eigval.max():
        raise InvalidSpec(
            "latent clip is rank-deficient; increase frames_per_utt or max_sinusoids")
    # ZCA whitening keeps the signals band-limited (linear mix of sinusoids)
    return z @ (eigvec * (1.0 / np.sqrt(eigval))) @ eigvec.T


def generate(spec: SynthSpec) -> SynthDataset:
    """Generate the synthetic cohort described by ``spec``; bit-stable per seed."""
    spec.validate()
    group_rngs = {g.label: np.random.default_rng((spec.seed, 1000 + i))
                  for i, g in enumerate(spec.groups)}
    distortions = {g.label: _sample_distortion(group_rngs[g.label], g)
                   for g in spec.groups}
    lift_rng = np.random.default_rng((spec.seed, 999))
    lift = lift_rng.standard_normal((spec.feature_dim, N_CHANNELS)) / np.sqrt(N_CHANNELS)

    speakers: list[SpeakerMeta] = []
    anatomies: dict[str, np.ndarray] = {}
    offsets: dict[str, np.ndarray] = {}
    groups_by_speaker: dict[str, str] = {}
    latents: dict[tuple[str, str], np.ndarray] = {}
    pairs: dict[str, list[tuple[FeatureMatrix, EmaTrajectory]]] = {}

    for s in range(spec.n_speakers):
        speaker_id = f"S{s:02d}"
        group = spec.groups[s % len(spec.groups)]
        srng = np.random.default_rng((spec.seed, s))
        anatomy = _sample_anatomy(srng, spec)
        offset = srng.uniform(-1.0, 1.0, size=N_CHANNELS)
        anatomies[speaker_id] = anatomy
        offsets[speaker_id] = offset
        groups_by_speaker[speaker_id] = group.label
        speakers.append(SpeakerMeta(
            speaker_id=speaker_id, corpus="synth", group=Group(group.label),
            gender=Gender.M if s % 2 == 0 else Gender.F,
            minutes=spec.utts_per_speaker * spec.frames_per_utt
            / spec.frame_rate / 60.0))
        system = anatomy @ distortions[group.label]

        speaker_pairs = []
        for u in range(spec.utts_per_speaker):
            utt_id = f"{speaker_id}_u{u:03d}"
            urng = np.random.default_rng((spec.seed, s, u))
            z = _latent_signals(urng, spec)
            latents[(speaker_id, utt_id)] = z
            ema = z @ system.T + offset
            if spec.noise_sigma > 0:
                ema = ema + urng.normal(0.0, spec.noise_sigma, size=ema.shape)
            feats = z @ lift.T
            if spec.feature_noise_sigma > 0:
                feats = feats + urng.normal(0.0, spec.feature_noise_sigma,
                                            size=feats.shape)
            speaker_pairs.append((
                FeatureMatrix(speaker_id=speaker_id, utterance_id=utt_id,
                              source="synth", frame_hop=1.0 / spec.frame_rate,
                              values=feats),
                EmaTrajectory(speaker_id=speaker_id, utterance_id=utt_id,
                              frame_rate=spec.frame_rate, samples=ema,
                              channel_order=CANONICAL_CHANNELS),
            ))
        pairs[speaker_id] = speaker_pairs

    truth = GroundTruth(spec=spec, lift=lift, distortions=distortions,
                        anatomies=anatomies, offsets=offsets,
                        groups_by_speaker=groups_by_speaker, latents=latents)
    return SynthDataset(spec=spec, speakers=speakers, pairs_by_speaker=pairs,
                        ground_truth=truth)
