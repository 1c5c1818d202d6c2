"""Cross-speaker affine alignments and transferability matrices."""

import warnings

import numpy as np
import pytest

from artikit.alignment import (
    AffineAlignment,
    TrainMode,
    TrainTestSplit,
    articulator_scores,
    coefficient_matrix,
    fit_alignment,
    group_matrix,
    transferability_matrix,
)
from artikit.core import EmaTrajectory, FeatureMatrix, N_CHANNELS
from artikit.errors import (
    EmptyGroupPair,
    SourceMismatch,
    TooFewUtterances,
)
from artikit.probing import CvPlan, fit_probe
from artikit.solvers import AffineMap, LassoConfig, apply
from artikit.probing import InversionProbe

from conftest import quiet_transfer


def planted_world(n_speakers=2, n_utts=8, frames=100, dim=16, seed=0):
    """Speakers whose EMA systems differ by known well-conditioned affine
    maps of a shared feature space; returns (data, true_maps)."""
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal((dim, N_CHANNELS)) / np.sqrt(dim)
    b0 = 0.1 * rng.standard_normal(N_CHANNELS)
    data, true_maps = {}, {}
    for s in range(n_speakers):
        name = chr(ord("A") + s)
        r = np.eye(N_CHANNELS) + 0.3 * rng.standard_normal(
            (N_CHANNELS, N_CHANNELS)) / np.sqrt(N_CHANNELS)
        c = 0.1 * rng.standard_normal(N_CHANNELS)
        w, b = w0 @ r, b0 @ r + c
        true_maps[name] = (r, c)
        pairs = []
        for u in range(n_utts):
            x = rng.standard_normal((frames, dim))
            utt = f"{name}_u{u:03d}"
            pairs.append((
                FeatureMatrix(speaker_id=name, utterance_id=utt,
                              source="layerX", frame_hop=0.02, values=x),
                EmaTrajectory(speaker_id=name, utterance_id=utt,
                              frame_rate=50.0, samples=x @ w + b),
            ))
        data[name] = pairs
    return data, true_maps


def fit_world_probes(data):
    probes = {}
    for name, pairs in data.items():
        plan = CvPlan.build([f.utterance_id for f, _ in pairs])
        probes[name] = fit_probe(pairs, plan)
    return probes


def test_split_deterministic_and_disjoint():
    ids = [f"u{i:02d}" for i in range(10)]
    split = TrainTestSplit(test_fraction=0.2, seed=17)
    train, test = split.split(ids)
    assert len(test) == 2 and len(train) == 8
    assert set(train) | set(test) == set(ids)
    assert not set(train) & set(test)
    assert split.split(ids[::-1]) == (train, test)
    assert TrainTestSplit(seed=18).split(ids) != (train, test)
    # a tiny pool still reserves one test utterance
    _, tiny_test = split.split(["a", "b"])
    assert len(tiny_test) == 1
    with pytest.raises(TooFewUtterances):
        split.split(["only"])


def test_alignment_recovers_planted_map():
    data, true_maps = planted_world(seed=1)
    probes = fit_world_probes(data)
    alignment = fit_alignment(probes["A"], probes["B"], data["B"],
                              cfg=LassoConfig(alpha=1e-6, max_iter=5000))
    assert alignment.source_speaker == "A"
    assert alignment.target_speaker == "B"
    assert alignment.transfer_corr.shape == (N_CHANNELS,)
    assert alignment.mean >= 0.99

    # the true map is g(y) = y @ (Ra^-1 Rb) + ...; with alpha ~ 0 the fitted
    # test predictions should sit within 2% RMS of speaker B's system
    ra, _ = true_maps["A"]
    rb, _ = true_maps["B"]
    np.testing.assert_allclose(alignment.map.weights,
                               np.linalg.solve(ra, rb), atol=0.02)

    split = TrainTestSplit()
    _, test_ids = split.split([f.utterance_id for f, _ in data["B"]])
    by_utt = {f.utterance_id: f for f, _ in data["B"]}
    x_test = np.vstack([by_utt[u].values for u in test_ids])
    moved = apply(alignment.map, apply(probes["A"].map, x_test))
    target = apply(probes["B"].map, x_test)
    rms_gap = np.sqrt(np.mean((moved - target) ** 2))
    assert rms_gap <= 0.02 * np.sqrt(np.mean(target ** 2))


def test_alignment_default_alpha_still_transfers():
    data, _ = planted_world(seed=2)
    probes = fit_world_probes(data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        alignment = fit_alignment(probes["A"], probes["B"], data["B"])
    assert alignment.mean >= 0.99       # Pearson forgives the L1 shrinkage


def test_alignment_to_ground_truth_mode():
    data, _ = planted_world(seed=3)
    probes = fit_world_probes(data)
    alignment = fit_alignment(probes["A"], probes["B"], data["B"],
                              cfg=LassoConfig(alpha=1e-6, max_iter=5000),
                              train_mode=TrainMode.TO_GROUND_TRUTH)
    assert alignment.train_mode is TrainMode.TO_GROUND_TRUTH
    assert alignment.mean >= 0.99


def test_alignment_source_mismatch():
    data, _ = planted_world(seed=4)
    probes = fit_world_probes(data)
    other = InversionProbe(speaker_id="A", source="layerY",
                           map=probes["A"].map,
                           cv_scores=probes["A"].cv_scores,
                           mean_corr=probes["A"].mean_corr)
    with pytest.raises(SourceMismatch):
        fit_alignment(other, probes["B"], data["B"])


def test_metric_invariant_to_probe_rescale_at_alpha_zero():
    # per-channel rescaling of A's predictions is absorbed by the fitted
    # affine map when nothing is penalized
    data, _ = planted_world(seed=5)
    probes = fit_world_probes(data)
    cfg = LassoConfig(alpha=0.0, max_iter=5000)
    base = fit_alignment(probes["A"], probes["B"], data["B"], cfg=cfg)
    scale = np.linspace(0.5, 3.0, N_CHANNELS)
    scaled = InversionProbe(
        speaker_id="A", source="layerX",
        map=AffineMap(weights=probes["A"].map.weights * scale,
                      bias=probes["A"].map.bias * scale),
        cv_scores=probes["A"].cv_scores, mean_corr=probes["A"].mean_corr)
    rescaled = fit_alignment(scaled, probes["B"], data["B"], cfg=cfg)
    np.testing.assert_allclose(rescaled.transfer_corr, base.transfer_corr,
                               atol=1e-6)


def test_transferability_matrix_shape_and_diagonal():
    data, _ = planted_world(n_speakers=3, seed=6)
    probes = fit_world_probes(data)
    ordered = [probes[k] for k in sorted(probes)]
    matrix, alignments = quiet_transfer(ordered, data)
    assert matrix.shape == (3, 3)
    assert len(alignments) == 9
    assert np.all(np.diag(matrix) >= 0.99)      # self-transfer is easy
    assert np.all(matrix >= 0.95)               # noiseless related systems
    assert alignments[1].source_speaker == "A"
    assert alignments[1].target_speaker == "B"

    with pytest.raises(TooFewUtterances):
        transferability_matrix(ordered[:1], data)


def test_transferability_matrix_thread_invariance(monkeypatch):
    data, _ = planted_world(n_speakers=3, seed=7, n_utts=5, frames=60)
    probes = fit_world_probes(data)
    ordered = [probes[k] for k in sorted(probes)]
    monkeypatch.setenv("ARTIKIT_THREADS", "1")
    serial, _ = quiet_transfer(ordered, data)
    monkeypatch.setenv("ARTIKIT_THREADS", "3")
    threaded, _ = quiet_transfer(ordered, data)
    assert np.array_equal(serial, threaded)


def test_group_matrix_hand_example():
    m = np.arange(16, dtype=np.float64).reshape(4, 4) / 10.0
    out, order = group_matrix(m, ["u", "u", "v", "v"])
    assert order == ["u", "v"]
    np.testing.assert_allclose(out, [[0.25, 0.45], [1.05, 1.25]], atol=1e-12)
    # explicit ordering transposes the blocks
    flipped, order2 = group_matrix(m, ["u", "u", "v", "v"],
                                   group_order=["v", "u"])
    assert order2 == ["v", "u"]
    np.testing.assert_allclose(flipped, [[1.25, 1.05], [0.45, 0.25]],
                               atol=1e-12)


def test_group_matrix_singleton_diagonal_raises():
    m = np.zeros((3, 3))
    with pytest.raises(EmptyGroupPair):
        group_matrix(m, ["u", "u", "v"])


def fake_alignment(weights, corr):
    return AffineAlignment(
        source_speaker="A", target_speaker="B",
        map=AffineMap(weights=weights, bias=np.zeros(N_CHANNELS)),
        train_mode=TrainMode.TO_PREDICTIONS,
        transfer_corr=np.asarray(corr, dtype=np.float64),
        mean=float(np.mean(corr)))


def test_coefficient_matrix_blocks():
    w = np.tile(np.arange(N_CHANNELS, dtype=np.float64)[:, None],
                (1, N_CHANNELS))
    pair = [fake_alignment(w, np.ones(N_CHANNELS)),
            fake_alignment(-w, np.ones(N_CHANNELS))]
    coef, blocks = coefficient_matrix(pair)
    np.testing.assert_allclose(coef, np.abs(w), atol=1e-15)
    assert blocks.shape == (6, 6)
    # averaging rows (2a, 2a+1) of |w| gives 2a + 0.5 in every column
    np.testing.assert_allclose(blocks,
                               np.tile(np.arange(6.0)[:, None] * 2 + 0.5,
                                       (1, 6)), atol=1e-15)
    with pytest.raises(EmptyGroupPair):
        coefficient_matrix([])


def test_articulator_scores_average():
    a = fake_alignment(np.eye(N_CHANNELS), np.linspace(0.0, 1.0, N_CHANNELS))
    b = fake_alignment(np.eye(N_CHANNELS), np.linspace(1.0, 0.0, N_CHANNELS))
    np.testing.assert_allclose(articulator_scores([a, b]),
                               np.full(N_CHANNELS, 0.5), atol=1e-15)
    with pytest.raises(EmptyGroupPair):
        articulator_scores([])
