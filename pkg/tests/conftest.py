"""Shared test helpers: small synthetic cohorts and probe fitting."""

import warnings

import numpy as np

from artikit.core import normalize_ema
from artikit.probing import CvPlan, fit_probe
from artikit.synth import SynthSpec, GroupSpec, generate


def small_spec(**overrides) -> SynthSpec:
    """A cohort small enough for unit tests but big enough for 5-fold CV."""
    defaults = dict(n_speakers=3, groups=(GroupSpec("EN.UK"),),
                    frames_per_utt=120, utts_per_speaker=6, feature_dim=24,
                    noise_sigma=0.0, seed=7)
    defaults.update(overrides)
    return SynthSpec(**defaults)


def normalized_pairs(dataset, speaker_id):
    """Per-clip standardized (features, EMA) pairs for one speaker.

    Synthetic EMA and features share the 50 Hz grid, so no alignment or
    filtering is needed before probing.
    """
    return [(f, normalize_ema(e))
            for f, e in dataset.pairs_by_speaker[speaker_id]]


def cohort_probes(dataset, n_folds=5, seed=17):
    """Fit one probe per speaker; returns (probes, data_by_speaker)."""
    probes, data = [], {}
    for meta in dataset.speakers:
        pairs = normalized_pairs(dataset, meta.speaker_id)
        plan = CvPlan.build([f.utterance_id for f, _ in pairs],
                            n_folds=n_folds, seed=seed)
        probes.append(fit_probe(pairs, plan))
        data[meta.speaker_id] = pairs
    return probes, data


def quiet_transfer(probes, data, **kwargs):
    """transferability_matrix with Lasso convergence warnings silenced."""
    from artikit.alignment import transferability_matrix
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return transferability_matrix(probes, data, **kwargs)
