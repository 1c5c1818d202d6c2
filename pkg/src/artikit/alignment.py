"""Affine alignment between speakers' articulatory systems.

For a source speaker A and a target speaker B, a sparse 12 -> 12 affine map
``g`` is fit on B's data so that ``g`` composed with A's inversion system
matches B's system; the transferability score is the per-channel Pearson
correlation corr(g o f_A, f_B) on a held-out split of B's utterances.
"""

from __future__ import annotations

import enum
import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import N_CHANNELS
from .errors import EmptyGroupPair, SourceMismatch, TooFewUtterances
from .probing import AlignedPair, InversionProbe, pearson
from .solvers import AffineMap, LassoConfig, apply, fit_lasso

N_ARTICULATORS = 6


class TrainMode(enum.Enum):
    TO_PREDICTIONS = "to_predictions"      # fit g against f_B's predictions
    TO_GROUND_TRUTH = "to_ground_truth"    # fit g against B's observed EMA


@dataclass(frozen=True)
class TrainTestSplit:
    """Deterministic utterance split by seeded hash, default 80/20."""

    test_fraction: float = 0.2
    seed: int = 17

    def split(self, utterance_ids: list[str]) -> tuple[list[str], list[str]]:
        ids = sorted(utterance_ids)
        if len(ids) < 2:
            raise TooFewUtterances("train/test split needs at least 2 utterances")
        def rank(utt: str) -> str:
            return hashlib.blake2b(f"{self.seed}:{utt}".encode(),
                                   digest_size=8).hexdigest()
        ordered = sorted(ids, key=rank)
        n_test = max(1, int(len(ids) * self.test_fraction))
        test = set(ordered[:n_test])
        return [u for u in ids if u not in test], [u for u in ids if u in test]


@dataclass(frozen=True)
class AffineAlignment:
    source_speaker: str
    target_speaker: str
    map: AffineMap                   # 12 -> 12
    train_mode: TrainMode
    transfer_corr: np.ndarray        # per-channel, canonical order
    mean: float

    def __post_init__(self):
        corr = np.asarray(self.transfer_corr, dtype=np.float64)
        corr.flags.writeable = False
        object.__setattr__(self, "transfer_corr", corr)


def fit_alignment(f_a: InversionProbe, f_b: InversionProbe,
                  target_data: list[AlignedPair],
                  cfg: LassoConfig = LassoConfig(),
                  split: TrainTestSplit = TrainTestSplit(),
                  train_mode: TrainMode = TrainMode.TO_PREDICTIONS
                  ) -> AffineAlignment:
    """Fit g aligning A's articulatory system to B's, scored on B's test split.

    Training targets are f_B's predictions by default (the metric compares
    the two systems), or B's ground-truth EMA in TO_GROUND_TRUTH mode. The
    reported transfer_corr is always corr(g o f_A, f_B) per channel.

    Raises:
        SourceMismatch: probes were fit on different feature sources.
    """
    if f_a.source != f_b.source:
        raise SourceMismatch(
            f"cannot align probes from different sources: "
            f"{f_a.source!r} vs {f_b.source!r}")
    by_utt = {f.utterance_id: (f, e) for f, e in target_data}
    train_ids, test_ids = split.split(list(by_utt))

    def stack(ids):
        x = np.vstack([by_utt[u][0].values for u in ids])
        y = np.vstack([by_utt[u][1].samples for u in ids])
        return x, y

    x_train, y_train = stack(train_ids)
    x_test, _ = stack(test_ids)
    p_a_train = apply(f_a.map, x_train)
    if train_mode is TrainMode.TO_PREDICTIONS:
        targets = apply(f_b.map, x_train)
    else:
        targets = y_train
    g = fit_lasso(p_a_train, targets, cfg)

    p_a_test = apply(g, apply(f_a.map, x_test))
    p_b_test = apply(f_b.map, x_test)
    corr = np.array([pearson(p_a_test[:, c], p_b_test[:, c])
                     for c in range(N_CHANNELS)])
    return AffineAlignment(source_speaker=f_a.speaker_id,
                           target_speaker=f_b.speaker_id,
                           map=g, train_mode=train_mode,
                           transfer_corr=corr, mean=float(corr.mean()))


def _worker_count() -> int:
    env = os.environ.get("ARTIKIT_THREADS", "")
    if env.strip():
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


def transferability_matrix(probes: list[InversionProbe],
                           data_by_speaker: dict[str, list[AlignedPair]],
                           cfg: LassoConfig = LassoConfig(),
                           split: TrainTestSplit = TrainTestSplit(),
                           train_mode: TrainMode = TrainMode.TO_PREDICTIONS,
                           ) -> tuple[np.ndarray, list[AffineAlignment]]:
    """All-pairs transferability: entry (A, B) = mean corr of g_{A->B}.

    The matrix is directed (not symmetrized); the diagonal holds
    self-transfer. Pair fits are independent and run on a bounded thread
    pool (ARTIKIT_THREADS).
    """
    if len(probes) < 2:
        raise TooFewUtterances("transferability needs at least 2 speakers")
    speakers = [p.speaker_id for p in probes]
    pairs = [(i, j) for i in range(len(probes)) for j in range(len(probes))]

    def fit_pair(ij):
        i, j = ij
        return fit_alignment(probes[i], probes[j],
                             data_by_speaker[speakers[j]],
                             cfg=cfg, split=split, train_mode=train_mode)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            alignments = list(pool.map(fit_pair, pairs))
    else:
        alignments = [fit_pair(ij) for ij in pairs]

    matrix = np.empty((len(probes), len(probes)))
    for (i, j), alignment in zip(pairs, alignments):
        matrix[i, j] = alignment.mean
    return matrix, alignments


def group_matrix(matrix: np.ndarray, speaker_groups: list[str],
                 group_order: list[str] | None = None
                 ) -> tuple[np.ndarray, list[str]]:
    """Average the speaker matrix over ordered pairs between groups.

    Entry (G1, G2) averages matrix[A, B] over A in G1, B in G2, A != B;
    the diagonal therefore uses distinct-speaker pairs only.

    Raises:
        EmptyGroupPair: some group pair has no eligible ordered pair
            (e.g. the diagonal of a singleton group).
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if group_order is None:
        group_order = sorted(set(speaker_groups), key=speaker_groups.index)
    members = {g: [i for i, sg in enumerate(speaker_groups) if sg == g]
               for g in group_order}
    out = np.empty((len(group_order), len(group_order)))
    for a, g1 in enumerate(group_order):
        for b, g2 in enumerate(group_order):
            vals = [matrix[i, j] for i in members[g1] for j in members[g2]
                    if i != j]
            if not vals:
                raise EmptyGroupPair(
                    f"no ordered speaker pair for groups {g1} -> {g2}")
            out[a, b] = np.mean(vals)
    return out, list(group_order)


def coefficient_matrix(alignments: list[AffineAlignment]
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Mean absolute alignment coefficients.

    Returns the 12 x 12 elementwise mean of |weights| (input channel x
    output channel) and its 6 x 6 per-articulator summary, where each entry
    averages the corresponding 2 x 2 channel block.
    """
    if not alignments:
        raise EmptyGroupPair("coefficient matrix needs at least one alignment")
    coef = np.mean([np.abs(a.map.weights) for a in alignments], axis=0)
    blocks = coef.reshape(N_ARTICULATORS, 2, N_ARTICULATORS, 2).mean(axis=(1, 3))
    return coef, blocks


def articulator_scores(alignments: list[AffineAlignment]) -> np.ndarray:
    """Per-channel mean transfer correlation, canonical channel order."""
    if not alignments:
        raise EmptyGroupPair("articulator scores need at least one alignment")
    return np.mean([a.transfer_corr for a in alignments], axis=0)
