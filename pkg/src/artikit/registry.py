"""Registry of the EMA corpora behind the cross-speaker cohort.

Static bookkeeping for the eight corpus/group cells used in the analysis:
how many speakers each contributes, how many survive the probe-quality
filter, and roughly how much parallel audio+EMA each speaker has. The
numbers describe the published cohort and are used to sanity-check real
runs and to size synthetic stand-ins; nothing here reads data.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Group
from .errors import DataError


@dataclass(frozen=True)
class CorpusRecord:
    corpus: str
    group: Group
    n_speakers: int          # speakers present in the corpus cell
    n_kept: int              # speakers passing the mean-correlation filter
    minutes_per_speaker: int # approximate parallel minutes per speaker


REGISTRY: tuple[CorpusRecord, ...] = (
    CorpusRecord("MNGU0", Group.EN_UK, 1, 1, 75),
    CorpusRecord("MOCHA-TIMIT", Group.EN_UK, 7, 7, 27),
    CorpusRecord("HPRC", Group.EN_US, 8, 8, 59),
    CorpusRecord("EMA-MAE", Group.EN_US, 20, 18, 12),
    CorpusRecord("EMA-MAE", Group.EN_BJ, 10, 9, 17),
    CorpusRecord("EMA-MAE", Group.EN_SH, 9, 5, 16),
    CorpusRecord("DKU-JNU-EMA", Group.MAN, 4, 2, 20),
    CorpusRecord("MSPKA", Group.IT, 3, 2, 47),
)


def total_speakers() -> int:
    return sum(r.n_speakers for r in REGISTRY)


def total_kept() -> int:
    return sum(r.n_kept for r in REGISTRY)


def records_for_group(group: Group | str) -> tuple[CorpusRecord, ...]:
    group = Group(group)
    return tuple(r for r in REGISTRY if r.group == group)


def record_for(corpus: str, group: Group | str | None = None) -> CorpusRecord:
    """Look up a registry cell; ``group`` disambiguates multi-group corpora."""
    hits = [r for r in REGISTRY if r.corpus == corpus]
    if group is not None:
        hits = [r for r in hits if r.group == Group(group)]
    if not hits:
        raise DataError(f"no registry entry for corpus {corpus!r} group {group!r}")
    if len(hits) > 1:
        raise DataError(
            f"corpus {corpus!r} spans several groups "
            f"({', '.join(r.group.value for r in hits)}); pass group= to pick one")
    return hits[0]


def corpora() -> tuple[str, ...]:
    seen: list[str] = []
    for r in REGISTRY:
        if r.corpus not in seen:
            seen.append(r.corpus)
    return tuple(seen)
