"""CSV/JSON report artifacts for analysis runs.

All numeric CSV cells are written with the "%.6g" format so files diff
cleanly across platforms; matrices are written with row and column labels
and can be read back for charting or later statistics.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

import numpy as np

from .core import CHANNEL_NAMES
from .errors import InvalidReport
from .probing import InversionProbe
from .stats import PairedComparison, WithinAcrossResult

FLOAT_FORMAT = "%.6g"


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def _open_out(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_probe_csv(probes: list[InversionProbe], groups: dict[str, str],
                    kept: set[str], path: str | Path) -> Path:
    """Per-speaker probe table: mean score, keep flag, per-channel scores."""
    path = _open_out(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "group", "source", "mean_corr", "kept",
                         *CHANNEL_NAMES])
        for p in probes:
            channel = p.channel_means()
            writer.writerow([p.speaker_id, groups.get(p.speaker_id, ""),
                             p.source, _fmt(p.mean_corr),
                             int(p.speaker_id in kept),
                             *[_fmt(v) for v in channel]])
    return path


def write_layer_sweep_csv(scores: dict[str, float], best: str,
                          path: str | Path) -> Path:
    """Cohort-mean probe score per feature source, with the winner flagged."""
    path = _open_out(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "mean_corr", "best"])
        for source, score in scores.items():
            writer.writerow([source, _fmt(score), int(source == best)])
    return path


def write_matrix_csv(matrix: np.ndarray, row_labels: list[str],
                     col_labels: list[str], path: str | Path,
                     corner: str = "") -> Path:
    """Labeled matrix: first row is the column header, first cell ``corner``."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape != (len(row_labels), len(col_labels)):
        raise InvalidReport(
            f"matrix shape {matrix.shape} does not match "
            f"{len(row_labels)} row / {len(col_labels)} column labels")
    path = _open_out(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([corner, *col_labels])
        for label, row in zip(row_labels, matrix):
            writer.writerow([label, *[_fmt(v) for v in row]])
    return path


def read_matrix_csv(path: str | Path) -> tuple[np.ndarray, list[str], list[str]]:
    """Read back a labeled matrix written by ``write_matrix_csv``.

    Raises:
        InvalidReport: missing header, ragged rows, or non-numeric cells.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise InvalidReport(f"{path}: no matrix header")
    col_labels = rows[0][1:]
    row_labels, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(col_labels) + 1:
            raise InvalidReport(f"{path}: line {i} has {len(row)} cells, "
                                f"expected {len(col_labels) + 1}")
        row_labels.append(row[0])
        try:
            values.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise InvalidReport(f"{path}: line {i}: {exc}") from exc
    if not values:
        raise InvalidReport(f"{path}: matrix has no rows")
    return np.array(values), row_labels, col_labels


def write_articulator_csv(channel_scores: np.ndarray, path: str | Path) -> Path:
    """Per-channel mean transfer correlation, canonical channel order."""
    channel_scores = np.asarray(channel_scores, dtype=np.float64)
    if channel_scores.shape != (len(CHANNEL_NAMES),):
        raise InvalidReport(
            f"expected {len(CHANNEL_NAMES)} channel scores, "
            f"got shape {channel_scores.shape}")
    path = _open_out(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", "mean_transfer_corr"])
        for name, score in zip(CHANNEL_NAMES, channel_scores):
            writer.writerow([name, _fmt(score)])
    return path


def write_stats_csv(comparisons: dict[str, PairedComparison | WithinAcrossResult],
                    path: str | Path) -> Path:
    """Flat table of hypothesis-test results, one row per comparison."""
    path = _open_out(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["comparison", "test", "n_a", "n_b", "mean_a", "mean_b",
                         "mean_diff", "p_value", "degenerate", "note"])
        for name, result in comparisons.items():
            if isinstance(result, PairedComparison):
                writer.writerow([
                    name, result.test.value,
                    len(result.a_scores), len(result.b_scores),
                    _fmt(float(np.mean(result.a_scores))),
                    _fmt(float(np.mean(result.b_scores))),
                    _fmt(result.mean_diff), _fmt(result.p_value),
                    int(result.degenerate), result.note])
            elif isinstance(result, WithinAcrossResult):
                writer.writerow([
                    name, result.test.value,
                    len(result.within), len(result.across),
                    _fmt(result.mean_within), _fmt(result.mean_across),
                    _fmt(result.mean_diff), _fmt(result.p_value), 0, ""])
            else:
                raise InvalidReport(f"unknown result type for {name!r}: "
                                    f"{type(result).__name__}")
    return path


def config_digest(config: dict) -> str:
    """Stable sha256 of a JSON-serializable config dict."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def write_run_meta(config: dict, path: str | Path, **extra) -> Path:
    """run_meta.json: the exact config, its digest, and run provenance."""
    from . import __version__
    path = _open_out(path)
    meta = {
        "package_version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": config,
        "config_sha256": config_digest(config),
        **extra,
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path
