"""Command-line entry points: artikit-extract and artikit-convert."""

import argparse
import logging
import sys

from .convert import LAYOUTS, convert_corpus
from .errors import ExtractorError
from .extract import extract, job_from_args


def _setup_logging() -> None:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


def main_extract(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="artikit-extract",
        description="dump per-layer hidden states of a speech checkpoint "
                    "to AKF feature files")
    parser.add_argument("--model", required=True,
                        help="checkpoint id or local path")
    parser.add_argument("--layers", default="all",
                        help="'all' or comma-separated indices "
                             "(0 = front-end output)")
    parser.add_argument("--manifest", required=True,
                        help="audio manifest JSON (speaker_id, group, gender, "
                             "utterance_id, wav_path, ema_path per row)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--device", choices=("cpu", "accelerator"),
                        default="cpu")
    parser.add_argument("--resample", action="store_true",
                        help="resample non-16 kHz audio instead of skipping")
    parser.add_argument("--tag", default=None,
                        help="source tag override (default: from model id)")
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        report = extract(job_from_args(args))
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(report.rows)} feature files -> {report.manifest_path}")
    if report.skipped:
        print(f"skipped {len(report.skipped)} clip(s):")
        for item in report.skipped:
            print(f"  {item['utterance_id']}: {item['reason']}")
    return 0


def main_convert(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="artikit-convert",
        description="convert a public EMA corpus to canonical AKF files")
    parser.add_argument("--corpus", required=True, choices=sorted(LAYOUTS))
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="corpus root in its published layout")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="output directory")
    args = parser.parse_args(argv)
    _setup_logging()
    try:
        result = convert_corpus(args.corpus, args.in_dir, args.out_dir)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{result.corpus}: {len(result.rows)} utterances from "
          f"{len(result.speakers)} speaker(s) -> {result.index_path}")
    for meta in result.speakers:
        print(f"  {meta.speaker_id}: group {meta.group.value}, "
              f"gender {meta.gender.value}, {meta.minutes:.2f} min")
    if result.flagged:
        print(f"flagged {len(result.flagged)} utterance(s) with "
              f"non-finite values:")
        for item in result.flagged:
            print(f"  {item['speaker_id']}/{item['utterance_id']}: "
                  f"{item['bad_values']} bad values")
    return 0


if __name__ == "__main__":
    sys.exit(main_extract())
