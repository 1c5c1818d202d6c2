"""Per-speaker linear inversion probes under utterance-level cross-validation.

A probe maps one feature source (model layer or acoustic baseline) to the 12
articulatory channels. Scores are per-channel Pearson correlations on
held-out folds, averaged over folds and channels; the final map is refit on
all data so downstream transfer analysis has one canonical system per
speaker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmaTrajectory, FeatureMatrix, N_CHANNELS
from .errors import (
    InconsistentCoverage,
    TooFewUtterances,
    ZeroVarianceInput,
)
from .solvers import AffineMap, apply, fit_least_squares

AlignedPair = tuple[FeatureMatrix, EmaTrajectory]


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson product-moment correlation, clipped to [-1, 1].

    Raises:
        ZeroVarianceInput: either vector is constant or shorter than 2.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ZeroVarianceInput(
            f"need two equal-length vectors with N >= 2, got {x.size} and {y.size}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(xd @ xd)
    sy = float(yd @ yd)
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceInput("correlation undefined for a constant input")
    r = float(xd @ yd) / np.sqrt(sx * sy)
    return float(np.clip(r, -1.0, 1.0))


@dataclass(frozen=True)
class CvPlan:
    """Deterministic utterance-to-fold assignment.

    The assignment is a pure function of (seed, sorted utterance ids):
    ids are sorted, shuffled by a seeded generator, and dealt round-robin,
    so fold sizes differ by at most one.
    """

    n_folds: int
    seed: int
    assignment: dict[str, int]

    @classmethod
    def build(cls, utterance_ids: list[str], n_folds: int = 5, seed: int = 17
              ) -> "CvPlan":
        ids = sorted(utterance_ids)
        if len(set(ids)) != len(ids):
            raise TooFewUtterances("duplicate utterance ids in CV plan")
        if len(ids) < n_folds:
            raise TooFewUtterances(
                f"{len(ids)} utterances cannot fill {n_folds} folds")
        rng = np.random.default_rng(seed)
        shuffled = [ids[i] for i in rng.permutation(len(ids))]
        assignment = {utt: i % n_folds for i, utt in enumerate(shuffled)}
        return cls(n_folds=n_folds, seed=seed, assignment=assignment)

    def fold_of(self, utterance_id: str) -> int:
        return self.assignment[utterance_id]


@dataclass(frozen=True)
class ProbeConfig:
    ridge: float | None = None       # explicit ridge; None selects automatic
    ridge_scale: float = 1e-4        # auto ridge = scale * trace(X^T X) / D
    per_utterance_corr: bool = False  # score per utterance instead of per fold


@dataclass(frozen=True)
class InversionProbe:
    speaker_id: str
    source: str
    map: AffineMap                   # D -> 12
    cv_scores: np.ndarray            # n_folds x 12
    mean_corr: float

    def __post_init__(self):
        scores = np.asarray(self.cv_scores, dtype=np.float64)
        scores.flags.writeable = False
        object.__setattr__(self, "cv_scores", scores)

    def channel_means(self) -> np.ndarray:
        return self.cv_scores.mean(axis=0)


def _resolve_ridge(x: np.ndarray, cfg: ProbeConfig) -> float:
    if cfg.ridge is not None:
        return cfg.ridge
    return cfg.ridge_scale * float(np.einsum("ij,ij->", x, x)) / x.shape[1]


def _stack(pairs: list[AlignedPair]) -> tuple[np.ndarray, np.ndarray]:
    x = np.vstack([f.values for f, _ in pairs])
    y = np.vstack([e.samples for _, e in pairs])
    return x, y


def fit_fold_maps(speaker_data: list[AlignedPair], plan: CvPlan,
                  cfg: ProbeConfig = ProbeConfig()) -> list[AffineMap]:
    """Fit one inversion map per fold, trained on the other folds' frames."""
    maps = []
    for fold in range(plan.n_folds):
        train = [p for p in speaker_data if plan.fold_of(p[0].utterance_id) != fold]
        if not train:
            raise TooFewUtterances(f"fold {fold} leaves no training utterances")
        x, y = _stack(train)
        maps.append(fit_least_squares(x, y, ridge=_resolve_ridge(x, cfg)))
    return maps


def score_fold(fold_map: AffineMap, held_out: list[AlignedPair],
               per_utterance: bool = False) -> np.ndarray:
    """Per-channel Pearson scores of a fold map on its held-out pairs.

    Default scores over the fold's concatenated frames; ``per_utterance``
    averages per-utterance correlations instead.
    """
    if per_utterance:
        per_utt = []
        for f, e in held_out:
            pred = apply(fold_map, f.values)
            per_utt.append([pearson(pred[:, c], e.samples[:, c])
                            for c in range(N_CHANNELS)])
        return np.mean(per_utt, axis=0)
    x, y = _stack(held_out)
    pred = apply(fold_map, x)
    return np.array([pearson(pred[:, c], y[:, c]) for c in range(N_CHANNELS)])


def fit_probe(speaker_data: list[AlignedPair], plan: CvPlan,
              cfg: ProbeConfig = ProbeConfig()) -> InversionProbe:
    """Cross-validated linear inversion probe for one speaker and source.

    Every pair must be frame-aligned and preprocessed (filtered/normalized)
    before fitting. Deterministic given (data, plan, cfg).

    Raises:
        TooFewUtterances: fewer utterances than folds.
        InconsistentCoverage: pairs carry mixed feature sources.
    """
    if len(speaker_data) < plan.n_folds:
        raise TooFewUtterances(
            f"{len(speaker_data)} utterances < {plan.n_folds} folds")
    for f, e in speaker_data:
        if f.n_frames != e.n_frames:
            raise InconsistentCoverage(
                f"{f.utterance_id}: features have {f.n_frames} frames, "
                f"EMA has {e.n_frames}; run align_frames first")
    sources = {f.source for f, _ in speaker_data}
    if len(sources) > 1:
        raise InconsistentCoverage(f"mixed feature sources in one probe: {sources}")

    fold_maps = fit_fold_maps(speaker_data, plan, cfg)
    cv_scores = np.empty((plan.n_folds, N_CHANNELS))
    for fold, fold_map in enumerate(fold_maps):
        held_out = [p for p in speaker_data
                    if plan.fold_of(p[0].utterance_id) == fold]
        if not held_out:
            raise TooFewUtterances(f"fold {fold} holds no utterances")
        cv_scores[fold] = score_fold(fold_map, held_out, cfg.per_utterance_corr)

    x, y = _stack(speaker_data)
    final = fit_least_squares(x, y, ridge=_resolve_ridge(x, cfg))
    speaker = speaker_data[0][0].speaker_id
    source = speaker_data[0][0].source
    return InversionProbe(speaker_id=speaker, source=source, map=final,
                          cv_scores=cv_scores,
                          mean_corr=float(cv_scores.mean()))


def layer_sweep(speaker_data: dict[str, list[AlignedPair]], layers: list[str],
                plan: CvPlan, cfg: ProbeConfig = ProbeConfig()
                ) -> tuple[list[InversionProbe], str]:
    """Fit one probe per feature source and pick the best.

    ``layers`` gives the sweep order; ties break toward the earlier entry.

    Raises:
        InconsistentCoverage: sources cover different utterance sets.
    """
    if not layers:
        raise InconsistentCoverage("layer sweep needs at least one source")
    coverage = {src: sorted(f.utterance_id for f, _ in speaker_data[src])
                for src in layers}
    reference = coverage[layers[0]]
    for src, utts in coverage.items():
        if utts != reference:
            raise InconsistentCoverage(
                f"source {src} covers {len(utts)} utterances, "
                f"{layers[0]} covers {len(reference)}")
    probes = [fit_probe(speaker_data[src], plan, cfg) for src in layers]
    best = 0
    for i, probe in enumerate(probes):
        if probe.mean_corr > probes[best].mean_corr:
            best = i
    return probes, layers[best]


def filter_speakers(probes: list[InversionProbe], threshold: float = 0.8
                    ) -> list[str]:
    """Speakers whose probes reach the threshold (inclusive), order-stable."""
    return [p.speaker_id for p in probes if p.mean_corr >= threshold]
