"""End-to-end analysis runs: manifest in, reports out.

A run loads feature/EMA pairs from a manifest, preprocesses EMA (low-pass,
per-clip standardization, frame alignment), fits per-speaker inversion
probes for every feature source, picks the transfer source, filters
speakers by probe quality, fits all-pairs cross-speaker alignments, and
writes the CSV/SVG/JSON report set.

Partial failures degrade gracefully: an utterance that cannot be
preprocessed is dropped from every source (keeping coverage identical
across sources), and a speaker who cannot support a probe or falls below
the quality threshold is excluded from transfer analysis. Every drop is
recorded in the run result and echoed as a warning.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .akf import read_akf, read_manifest
from .alignment import (
    AffineAlignment,
    TrainMode,
    TrainTestSplit,
    articulator_scores,
    coefficient_matrix,
    group_matrix,
    transferability_matrix,
)
from .charts import bar_chart_svg, heatmap_svg, save_svg, scatter_svg
from .core import (
    CHANNEL_NAMES,
    EmaTrajectory,
    FeatureMatrix,
    Gender,
    Group,
    SpeakerMeta,
    align_frames,
    lowpass_filter,
    normalize_ema,
)
from .errors import ArtikitError, ConfigError, DataError, EmptyCell, EmptyGroupPair
from .probing import AlignedPair, CvPlan, InversionProbe, ProbeConfig, fit_probe
from .reports import (
    write_articulator_csv,
    write_layer_sweep_csv,
    write_matrix_csv,
    write_probe_csv,
    write_run_meta,
    write_stats_csv,
)
from .solvers import LassoConfig
from .stats import (
    PairedComparison,
    TestKind,
    WithinAcrossResult,
    dialect_cells,
    gender_cells,
    paired_test,
    within_across,
)

ARTICULATOR_NAMES = ("LI", "UL", "LL", "TT", "TB", "TD")


class NormalizationOrder(enum.Enum):
    FILTER_THEN_NORMALIZE = "filter-then-normalize"
    NORMALIZE_THEN_FILTER = "normalize-then-filter"


@dataclass(frozen=True)
class RunConfig:
    manifest: str
    out_dir: str | None = None
    sources: tuple[str, ...] | None = None   # None: every source in the manifest
    transfer_source: str | None = "xlsr-layer17"  # None: best source by sweep
    lowpass_hz: float | None = 6.0
    normalization_order: NormalizationOrder = NormalizationOrder.FILTER_THEN_NORMALIZE
    n_folds: int = 5
    cv_seed: int = 17
    keep_threshold: float = 0.8
    ridge: float | None = None
    ridge_scale: float = 1e-4
    lasso_alpha: float = 0.01
    lasso_max_iter: int = 1000
    lasso_tol: float = 1e-6
    test_fraction: float = 0.2
    split_seed: int = 17
    train_mode: TrainMode = TrainMode.TO_PREDICTIONS
    charts: bool = True

    def validate(self) -> None:
        if self.n_folds < 2:
            raise ConfigError(f"n_folds must be >= 2, got {self.n_folds}")
        if not 0 <= self.keep_threshold <= 1:
            raise ConfigError(f"keep_threshold must be in [0, 1], "
                              f"got {self.keep_threshold}")
        if self.lowpass_hz is not None and self.lowpass_hz <= 0:
            raise ConfigError(f"lowpass_hz must be positive or None, "
                              f"got {self.lowpass_hz}")
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), "
                              f"got {self.test_fraction}")
        if self.lasso_alpha < 0:
            raise ConfigError(f"lasso_alpha must be nonnegative, "
                              f"got {self.lasso_alpha}")

    def to_json(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, enum.Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[key] = value
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "RunConfig":
        known = dict(raw)
        unknown = set(known) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "manifest" not in known:
            raise ConfigError("config requires a manifest path")
        if known.get("sources") is not None:
            known["sources"] = tuple(known["sources"])
        if "normalization_order" in known:
            known["normalization_order"] = NormalizationOrder(
                known["normalization_order"])
        if "train_mode" in known:
            known["train_mode"] = TrainMode(known["train_mode"])
        return cls(**known)


@dataclass
class RunResult:
    config: RunConfig
    metas: dict[str, SpeakerMeta]
    probes_by_source: dict[str, list[InversionProbe]]
    sweep_scores: dict[str, float]
    selected_source: str
    kept_speakers: list[str]
    matrix: np.ndarray
    alignments: list[AffineAlignment]
    group_mat: np.ndarray | None
    group_labels: list[str]
    coef_matrix: np.ndarray
    articulator_blocks: np.ndarray
    channel_scores: np.ndarray
    stats: dict[str, PairedComparison | WithinAcrossResult]
    dropped: list[dict] = field(default_factory=list)
    report_paths: dict[str, Path] = field(default_factory=dict)


def preprocess_ema(ema: EmaTrajectory, config: RunConfig) -> EmaTrajectory:
    """Canonical channel order, optional low-pass, per-clip standardization."""
    ema = ema.in_canonical_order()
    if config.normalization_order is NormalizationOrder.FILTER_THEN_NORMALIZE:
        if config.lowpass_hz is not None:
            ema = lowpass_filter(ema, config.lowpass_hz)
        return normalize_ema(ema)
    ema = normalize_ema(ema)
    if config.lowpass_hz is not None:
        ema = lowpass_filter(ema, config.lowpass_hz)
    return ema


@dataclass
class _Corpus:
    metas: dict[str, SpeakerMeta]
    sources: list[str]
    # data[source][speaker_id] -> aligned (features, ema) pairs
    data: dict[str, dict[str, list[AlignedPair]]]
    dropped: list[dict]


def _load_corpus(config: RunConfig) -> _Corpus:
    rows = read_manifest(config.manifest)
    metas: dict[str, SpeakerMeta] = {}
    by_utt: dict[tuple[str, str], dict[str, FeatureMatrix]] = {}
    ema_by_utt: dict[tuple[str, str], EmaTrajectory] = {}
    dropped: list[dict] = []

    for row in rows:
        speaker, utt = row["speaker_id"], row["utterance_id"]
        if speaker not in metas:
            try:
                group = Group(row["group"])
            except ValueError as exc:
                raise DataError(f"{speaker}: unknown group {row['group']!r}") from exc
            try:
                gender = Gender(row["gender"])
            except ValueError:
                gender = Gender.UNKNOWN
            metas[speaker] = SpeakerMeta(speaker_id=speaker,
                                         corpus=row.get("corpus", ""),
                                         group=group, gender=gender)
        feat = read_akf(row["feature_path"])
        if not isinstance(feat, FeatureMatrix):
            raise DataError(f"{row['feature_path']}: expected a feature file")
        if (speaker, utt) not in ema_by_utt:
            ema = read_akf(row["ema_path"])
            if not isinstance(ema, EmaTrajectory):
                raise DataError(f"{row['ema_path']}: expected an EMA file")
            ema_by_utt[(speaker, utt)] = ema
        by_utt.setdefault((speaker, utt), {})[feat.source] = feat

    if config.sources is not None:
        sources = list(config.sources)
    else:
        sources = sorted({src for feats in by_utt.values() for src in feats})
    if not sources:
        raise DataError(f"{config.manifest}: no feature sources found")

    data: dict[str, dict[str, list[AlignedPair]]] = {s: {} for s in sources}
    for (speaker, utt), feats in sorted(by_utt.items()):
        missing = [s for s in sources if s not in feats]
        if missing:
            dropped.append({"speaker": speaker, "utterance": utt,
                            "reason": f"missing sources {missing}"})
            continue
        try:
            ema = preprocess_ema(ema_by_utt[(speaker, utt)], config)
            aligned = {}
            for s in sources:
                ema_out, feat_out = align_frames(ema, feats[s])
                aligned[s] = (feat_out, ema_out)
        except ArtikitError as exc:
            dropped.append({"speaker": speaker, "utterance": utt,
                            "reason": f"{type(exc).__name__}: {exc}"})
            continue
        for s in sources:
            data[s].setdefault(speaker, []).append(aligned[s])
    return _Corpus(metas=metas, sources=sources, data=data, dropped=dropped)


def _fit_probes(corpus: _Corpus, config: RunConfig
                ) -> tuple[dict[str, list[InversionProbe]], list[dict]]:
    cfg = ProbeConfig(ridge=config.ridge, ridge_scale=config.ridge_scale)
    probes: dict[str, list[InversionProbe]] = {}
    dropped: list[dict] = []
    for source in corpus.sources:
        fitted = []
        for speaker in sorted(corpus.data[source]):
            pairs = corpus.data[source][speaker]
            try:
                plan = CvPlan.build([f.utterance_id for f, _ in pairs],
                                    n_folds=config.n_folds, seed=config.cv_seed)
                fitted.append(fit_probe(pairs, plan, cfg))
            except ArtikitError as exc:
                dropped.append({"speaker": speaker, "source": source,
                                "reason": f"{type(exc).__name__}: {exc}"})
        probes[source] = fitted
    return probes, dropped


def _select_source(probes: dict[str, list[InversionProbe]],
                   sources: list[str], config: RunConfig
                   ) -> tuple[dict[str, float], str]:
    scores = {s: float(np.mean([p.mean_corr for p in probes[s]]))
              if probes[s] else float("nan") for s in sources}
    if config.transfer_source is not None:
        if config.transfer_source not in sources:
            raise ConfigError(
                f"transfer_source {config.transfer_source!r} not among "
                f"available sources {sources}")
        return scores, config.transfer_source
    best = sources[0]
    for s in sources[1:]:
        if np.isnan(scores[best]) or scores[s] > scores[best]:
            best = s
    if np.isnan(scores[best]):
        raise DataError("no source produced any probe")
    return scores, best


def _run_stats(matrix: np.ndarray, kept_metas: list[SpeakerMeta],
               probes_by_source: dict[str, list[InversionProbe]],
               selected: str, dropped: list[dict]
               ) -> dict[str, PairedComparison | WithinAcrossResult]:
    stats: dict[str, PairedComparison | WithinAcrossResult] = {}
    partitions = {
        "within_vs_across_group": [m.group.value for m in kept_metas],
        "dialect_within_vs_across": dialect_cells(kept_metas),
        "gender_within_vs_across": gender_cells(kept_metas),
    }
    for name, cells in partitions.items():
        try:
            stats[name] = within_across(matrix, cells)
        except EmptyCell as exc:
            dropped.append({"comparison": name, "reason": str(exc)})

    means = {src: {p.speaker_id: p.mean_corr for p in probes}
             for src, probes in probes_by_source.items()}
    for src in probes_by_source:
        if src == selected:
            continue
        common = sorted(set(means[selected]) & set(means[src]))
        if len(common) < 3:
            dropped.append({"comparison": f"{selected}_vs_{src}",
                            "reason": f"only {len(common)} common speakers"})
            continue
        a = [means[selected][s] for s in common]
        b = [means[src][s] for s in common]
        stats[f"{selected}_vs_{src}_t"] = paired_test(
            a, b, TestKind.PAIRED_T, labels=common)
        stats[f"{selected}_vs_{src}_wilcoxon"] = paired_test(
            a, b, TestKind.WILCOXON, labels=common)
    return stats


def _within_across_points(matrix: np.ndarray, groups: list[str]
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Per-speaker (mean across-group, mean within-group) transfer scores."""
    xs, ys = [], []
    for i, gi in enumerate(groups):
        within = [matrix[i, j] for j, gj in enumerate(groups)
                  if i != j and gi == gj]
        across = [matrix[i, j] for j, gj in enumerate(groups) if gi != gj]
        if within and across:
            xs.append(np.mean(across))
            ys.append(np.mean(within))
    return np.array(xs), np.array(ys)


def _write_reports(result: RunResult, out_dir: Path) -> None:
    cfg = result.config
    groups = {sid: m.group.value for sid, m in result.metas.items()}
    kept = set(result.kept_speakers)
    paths = result.report_paths

    all_probes = [p for src in result.probes_by_source
                  for p in result.probes_by_source[src]]
    paths["probe_results"] = write_probe_csv(
        all_probes, groups, kept, out_dir / "probe_results.csv")
    paths["layer_sweep"] = write_layer_sweep_csv(
        result.sweep_scores, result.selected_source, out_dir / "layer_sweep.csv")
    paths["transfer_matrix"] = write_matrix_csv(
        result.matrix, result.kept_speakers, result.kept_speakers,
        out_dir / "transfer_matrix.csv", corner="source\\target")
    if result.group_mat is not None:
        paths["group_matrix"] = write_matrix_csv(
            result.group_mat, result.group_labels, result.group_labels,
            out_dir / "group_matrix.csv", corner="source\\target")
    paths["coef_matrix"] = write_matrix_csv(
        result.coef_matrix, list(CHANNEL_NAMES), list(CHANNEL_NAMES),
        out_dir / "coef_matrix.csv", corner="in\\out")
    paths["articulator_summary"] = write_matrix_csv(
        result.articulator_blocks, list(ARTICULATOR_NAMES),
        list(ARTICULATOR_NAMES), out_dir / "articulator_summary.csv",
        corner="in\\out")
    paths["articulator_channels"] = write_articulator_csv(
        result.channel_scores, out_dir / "articulator_channels.csv")
    paths["stats"] = write_stats_csv(result.stats, out_dir / "stats.csv")
    paths["run_meta"] = write_run_meta(
        cfg.to_json(), out_dir / "run_meta.json",
        selected_source=result.selected_source,
        kept_speakers=result.kept_speakers,
        n_dropped=len(result.dropped), dropped=result.dropped)

    if not cfg.charts:
        return
    paths["transfer_matrix_svg"] = save_svg(
        heatmap_svg(result.matrix, result.kept_speakers, result.kept_speakers,
                    title=f"Transferability ({result.selected_source})"),
        out_dir / "transfer_matrix.svg")
    if result.group_mat is not None:
        paths["group_matrix_svg"] = save_svg(
            heatmap_svg(result.group_mat, result.group_labels,
                        result.group_labels, title="Group transferability"),
            out_dir / "group_matrix.svg")
    paths["coef_matrix_svg"] = save_svg(
        heatmap_svg(result.coef_matrix, list(CHANNEL_NAMES),
                    list(CHANNEL_NAMES), title="Mean |alignment weight|"),
        out_dir / "coef_matrix.svg")
    paths["articulator_scores_svg"] = save_svg(
        bar_chart_svg(list(CHANNEL_NAMES), result.channel_scores,
                      title="Per-channel transfer", y_label="mean corr"),
        out_dir / "articulator_scores.svg")
    kept_groups = [groups[s] for s in result.kept_speakers]
    xs, ys = _within_across_points(result.matrix, kept_groups)
    if xs.size:
        paths["within_across_svg"] = save_svg(
            scatter_svg(xs, ys, title="Within vs. across group",
                        x_label="mean across-group corr",
                        y_label="mean within-group corr"),
            out_dir / "within_across.svg")


def run_full_pipeline(config: RunConfig) -> RunResult:
    """Execute a full analysis run; see the module docstring for stages."""
    config.validate()
    corpus = _load_corpus(config)
    dropped = list(corpus.dropped)
    for item in dropped:
        warnings.warn(f"dropped {item}", stacklevel=2)

    probes_by_source, probe_drops = _fit_probes(corpus, config)
    for item in probe_drops:
        warnings.warn(f"dropped {item}", stacklevel=2)
    dropped.extend(probe_drops)

    sweep_scores, selected = _select_source(probes_by_source, corpus.sources,
                                            config)
    selected_probes = probes_by_source[selected]
    kept = [p.speaker_id for p in selected_probes
            if p.mean_corr >= config.keep_threshold]
    if len(kept) < 2:
        raise DataError(
            f"only {len(kept)} speaker(s) pass threshold "
            f"{config.keep_threshold} on {selected}; need at least 2")

    kept_probes = [p for p in selected_probes if p.speaker_id in kept]
    lasso = LassoConfig(alpha=config.lasso_alpha, max_iter=config.lasso_max_iter,
                        tol=config.lasso_tol)
    split = TrainTestSplit(test_fraction=config.test_fraction,
                           seed=config.split_seed)
    matrix, alignments = transferability_matrix(
        kept_probes, corpus.data[selected], cfg=lasso, split=split,
        train_mode=config.train_mode)

    kept_metas = [corpus.metas[s] for s in kept]
    kept_groups = [m.group.value for m in kept_metas]
    group_order = [g.value for g in Group if g.value in kept_groups]
    try:
        group_mat, group_labels = group_matrix(matrix, kept_groups, group_order)
    except EmptyGroupPair as exc:
        warnings.warn(f"group matrix skipped: {exc}", stacklevel=2)
        dropped.append({"comparison": "group_matrix", "reason": str(exc)})
        group_mat, group_labels = None, group_order

    cross = [a for a in alignments if a.source_speaker != a.target_speaker]
    coef, blocks = coefficient_matrix(cross)
    channel_scores = articulator_scores(cross)
    stats = _run_stats(matrix, kept_metas, probes_by_source, selected, dropped)

    result = RunResult(
        config=config, metas=corpus.metas, probes_by_source=probes_by_source,
        sweep_scores=sweep_scores, selected_source=selected,
        kept_speakers=kept, matrix=matrix, alignments=alignments,
        group_mat=group_mat, group_labels=group_labels, coef_matrix=coef,
        articulator_blocks=blocks, channel_scores=channel_scores,
        stats=stats, dropped=dropped)
    if config.out_dir is not None:
        _write_reports(result, Path(config.out_dir))
    return result
