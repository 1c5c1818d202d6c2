"""Command-line entry points for the analysis toolkit.

Subcommands mirror the library stages: ``synth`` writes a synthetic
corpus, ``baseline`` computes acoustic baseline features from audio,
``probe``/``layer-sweep`` fit inversion probes, ``transfer`` builds the
cross-speaker matrix, ``compare`` runs paired statistics between two probe
tables, ``run`` executes the full pipeline, and ``report`` re-renders
charts from an existing run directory.

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .acoustic import BASELINES, MelConfig, load_wav
from .akf import write_akf, write_manifest
from .alignment import TrainTestSplit, transferability_matrix
from .charts import bar_chart_svg, heatmap_svg, save_svg
from .errors import ConfigError, DataError, NumericalError
from .pipeline import (
    NormalizationOrder,
    RunConfig,
    _fit_probes,
    _load_corpus,
    _select_source,
    run_full_pipeline,
)
from .reports import (
    read_matrix_csv,
    write_layer_sweep_csv,
    write_matrix_csv,
    write_probe_csv,
)
from .solvers import LassoConfig
from .stats import TestKind, paired_test
from .synth import GroupSpec, SynthSpec, generate


def _add_preprocess_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", required=True, help="corpus manifest JSON")
    sub.add_argument("--lowpass-hz", type=float, default=6.0)
    sub.add_argument("--no-lowpass", action="store_true",
                     help="skip the EMA low-pass filter")
    sub.add_argument("--normalization-order",
                     choices=[o.value for o in NormalizationOrder],
                     default=NormalizationOrder.FILTER_THEN_NORMALIZE.value)
    sub.add_argument("--folds", type=int, default=5)
    sub.add_argument("--cv-seed", type=int, default=17)
    sub.add_argument("--threshold", type=float, default=0.8,
                     help="mean-correlation speaker filter")


def _base_config(args, sources=None, transfer_source=None) -> RunConfig:
    return RunConfig(
        manifest=args.manifest,
        sources=tuple(sources) if sources else None,
        transfer_source=transfer_source,
        lowpass_hz=None if args.no_lowpass else args.lowpass_hz,
        normalization_order=NormalizationOrder(args.normalization_order),
        n_folds=args.folds, cv_seed=args.cv_seed,
        keep_threshold=args.threshold)


def cmd_synth(args) -> int:
    groups = []
    for token in args.groups.split(","):
        label, _, strength = token.partition(":")
        groups.append(GroupSpec(label.strip(),
                                float(strength) if strength else 0.0))
    spec = SynthSpec(n_speakers=args.speakers, groups=tuple(groups),
                     frames_per_utt=args.frames, utts_per_speaker=args.utts,
                     feature_dim=args.feature_dim, noise_sigma=args.noise,
                     seed=args.seed)
    dataset = generate(spec)
    manifest = dataset.save(args.out)
    print(f"wrote {len(dataset.speakers)} speakers x "
          f"{spec.utts_per_speaker} utterances to {manifest}")
    return 0


def cmd_baseline(args) -> int:
    raw = json.loads(Path(args.audio_manifest).read_text())
    if not isinstance(raw, list):
        raise DataError(f"{args.audio_manifest}: expected a list of rows")
    base = Path(args.audio_manifest).parent
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    compute = BASELINES[args.kind]
    cfg = MelConfig()
    rows = []
    for row in raw:
        missing = [k for k in ("speaker_id", "group", "gender", "utterance_id",
                               "wav_path", "ema_path") if k not in row]
        if missing:
            raise DataError(f"{args.audio_manifest}: row missing {missing}")
        clip = load_wav(base / row["wav_path"], expected_rate=args.rate)
        feat = compute(clip, cfg)
        feat_name = f"{row['speaker_id']}_{row['utterance_id']}_{args.kind}.akf"
        write_akf(feat, out_dir / feat_name)
        rows.append({**{k: row[k] for k in ("speaker_id", "group", "gender",
                                            "utterance_id")},
                     "feature_path": feat_name,
                     "ema_path": str((base / row["ema_path"]).resolve())})
    manifest_path = out_dir / "manifest.json"
    write_manifest(rows, manifest_path)
    print(f"wrote {len(rows)} {args.kind} feature files to {out_dir}")
    return 0


def cmd_probe(args) -> int:
    config = _base_config(args, sources=[args.source] if args.source else None)
    corpus = _load_corpus(config)
    probes_by_source, drops = _fit_probes(corpus, config)
    for item in drops:
        print(f"warning: dropped {item}", file=sys.stderr)
    source = args.source or corpus.sources[0]
    probes = probes_by_source[source]
    if not probes:
        raise DataError(f"no probes could be fitted for source {source!r}")
    kept = {p.speaker_id for p in probes if p.mean_corr >= args.threshold}
    for p in probes:
        flag = "kept" if p.speaker_id in kept else "excluded"
        print(f"{p.speaker_id:<14} {p.mean_corr:8.4f}  {flag}")
    print(f"cohort mean {np.mean([p.mean_corr for p in probes]):.4f}  "
          f"({len(kept)}/{len(probes)} kept at >= {args.threshold})")
    if args.out:
        groups = {sid: m.group.value for sid, m in corpus.metas.items()}
        write_probe_csv(probes, groups, kept, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_layer_sweep(args) -> int:
    sources = [s.strip() for s in args.sources.split(",")] if args.sources else None
    config = _base_config(args, sources=sources)
    corpus = _load_corpus(config)
    probes_by_source, drops = _fit_probes(corpus, config)
    for item in drops:
        print(f"warning: dropped {item}", file=sys.stderr)
    scores, best = _select_source(probes_by_source, corpus.sources, config)
    for source in corpus.sources:
        marker = "  <- best" if source == best else ""
        print(f"{source:<20} {scores[source]:8.4f}{marker}")
    if args.out:
        write_layer_sweep_csv(scores, best, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_transfer(args) -> int:
    config = _base_config(args, sources=[args.source] if args.source else None)
    corpus = _load_corpus(config)
    probes_by_source, drops = _fit_probes(corpus, config)
    for item in drops:
        print(f"warning: dropped {item}", file=sys.stderr)
    source = args.source or corpus.sources[0]
    probes = [p for p in probes_by_source[source]
              if p.mean_corr >= args.threshold]
    if len(probes) < 2:
        raise DataError(f"only {len(probes)} speakers pass the threshold; "
                        "need at least 2 for transfer analysis")
    matrix, _ = transferability_matrix(
        probes, corpus.data[source],
        cfg=LassoConfig(alpha=args.alpha),
        split=TrainTestSplit(seed=args.split_seed))
    speakers = [p.speaker_id for p in probes]
    off = matrix[~np.eye(len(speakers), dtype=bool)]
    print(f"{len(speakers)} speakers; mean cross-speaker transfer "
          f"{off.mean():.4f} (min {off.min():.4f}, max {off.max():.4f})")
    out_dir = Path(args.out_dir)
    write_matrix_csv(matrix, speakers, speakers,
                     out_dir / "transfer_matrix.csv", corner="source\\target")
    save_svg(heatmap_svg(matrix, speakers, speakers,
                         title=f"Transferability ({source})"),
             out_dir / "transfer_matrix.svg")
    print(f"wrote {out_dir / 'transfer_matrix.csv'}")
    return 0


def _read_probe_scores(path: str) -> dict[str, float]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "mean_corr" not in rows[0]:
        raise DataError(f"{path}: not a probe results table")
    return {r["speaker_id"]: float(r["mean_corr"]) for r in rows}


def cmd_compare(args) -> int:
    a_scores = _read_probe_scores(args.a)
    b_scores = _read_probe_scores(args.b)
    common = sorted(set(a_scores) & set(b_scores))
    if not common:
        raise DataError("the two tables share no speakers")
    kind = TestKind.PAIRED_T if args.test == "t" else TestKind.WILCOXON
    result = paired_test([a_scores[s] for s in common],
                         [b_scores[s] for s in common], kind, labels=common)
    print(f"n={len(common)}  mean_diff={result.mean_diff:+.6g}  "
          f"p={result.p_value:.3g}  ({result.test.value})")
    if result.degenerate:
        print(f"note: degenerate comparison ({result.note})")
    return 0


def cmd_run(args) -> int:
    raw = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    if args.manifest:
        raw["manifest"] = args.manifest
    if args.out_dir:
        raw["out_dir"] = args.out_dir
    if args.transfer_source:
        raw["transfer_source"] = (None if args.transfer_source == "auto"
                                  else args.transfer_source)
    if args.no_charts:
        raw["charts"] = False
    if "manifest" not in raw:
        raise ConfigError("run needs --manifest or a config file with one")
    result = run_full_pipeline(RunConfig.from_json(raw))
    kept, total = len(result.kept_speakers), len(result.metas)
    print(f"selected source: {result.selected_source}")
    print(f"kept speakers:   {kept}/{total}")
    off = result.matrix[~np.eye(kept, dtype=bool)]
    print(f"mean transfer:   {off.mean():.4f}")
    for name, res in result.stats.items():
        if hasattr(res, "mean_within"):
            print(f"{name}: within {res.mean_within:.4f} vs across "
                  f"{res.mean_across:.4f} (p={res.p_value:.3g})")
        else:
            print(f"{name}: mean diff {res.mean_diff:+.4f} "
                  f"(p={res.p_value:.3g})")
    if result.dropped:
        print(f"{len(result.dropped)} drop(s); see run_meta.json")
    if result.config.out_dir:
        print(f"reports in {result.config.out_dir}")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    made = []
    for stem, title in (("transfer_matrix", "Transferability"),
                        ("group_matrix", "Group transferability"),
                        ("coef_matrix", "Mean |alignment weight|"),
                        ("articulator_summary", "Articulator summary")):
        csv_path = run_dir / f"{stem}.csv"
        if not csv_path.exists():
            continue
        matrix, rows, cols = read_matrix_csv(csv_path)
        save_svg(heatmap_svg(matrix, rows, cols, title=title),
                 run_dir / f"{stem}.svg")
        made.append(f"{stem}.svg")
    channels_csv = run_dir / "articulator_channels.csv"
    if channels_csv.exists():
        with channels_csv.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        save_svg(bar_chart_svg([r["channel"] for r in rows],
                               [float(r["mean_transfer_corr"]) for r in rows],
                               title="Per-channel transfer",
                               y_label="mean corr"),
                 run_dir / "articulator_scores.svg")
        made.append("articulator_scores.svg")
    if not made:
        raise DataError(f"{run_dir}: no report CSVs found")
    print(f"rendered {', '.join(made)} in {run_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artikit",
        description="Articulatory probing and cross-speaker transfer analysis")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--speakers", type=int, default=6)
    p.add_argument("--groups", default="EN.UK",
                   help="comma list of LABEL or LABEL:STRENGTH cohorts")
    p.add_argument("--utts", type=int, default=10)
    p.add_argument("--frames", type=int, default=250)
    p.add_argument("--feature-dim", type=int, default=64)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("baseline", help="compute acoustic baseline features")
    p.add_argument("--audio-manifest", required=True,
                   help="JSON rows with wav_path and ema_path")
    p.add_argument("--kind", choices=sorted(BASELINES), default="mfcc")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--rate", type=int, default=16000)
    p.set_defaults(func=cmd_baseline)

    p = subs.add_parser("probe", help="fit per-speaker inversion probes")
    _add_preprocess_args(p)
    p.add_argument("--source", help="feature source (default: first found)")
    p.add_argument("--out", help="write probe_results.csv here")
    p.set_defaults(func=cmd_probe)

    p = subs.add_parser("layer-sweep", help="score every feature source")
    _add_preprocess_args(p)
    p.add_argument("--sources", help="comma list; default: all in manifest")
    p.add_argument("--out", help="write layer_sweep.csv here")
    p.set_defaults(func=cmd_layer_sweep)

    p = subs.add_parser("transfer", help="all-pairs cross-speaker transfer")
    _add_preprocess_args(p)
    p.add_argument("--source", help="feature source (default: first found)")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--split-seed", type=int, default=17)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_transfer)

    p = subs.add_parser("compare", help="paired test between two probe tables")
    p.add_argument("--a", required=True, help="probe_results.csv (condition A)")
    p.add_argument("--b", required=True, help="probe_results.csv (condition B)")
    p.add_argument("--test", choices=("t", "wilcoxon"), default="t")
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("run", help="full pipeline: manifest in, reports out")
    p.add_argument("--config", help="RunConfig JSON file")
    p.add_argument("--manifest")
    p.add_argument("--out-dir")
    p.add_argument("--transfer-source",
                   help="source for transfer analysis, or 'auto'")
    p.add_argument("--no-charts", action="store_true")
    p.set_defaults(func=cmd_run)

    p = subs.add_parser("report", help="re-render charts from run CSVs")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
