"""Best-effort converters from public EMA corpus layouts to AKF.

Each supported corpus has a declarative layout: a file glob, a reader
(EST-style track, MATLAB .mat, or headered TSV), a native-sensor map onto
the six canonical articulators, and a group label. Conversion keeps the
corpus's native frame rate (downstream alignment handles rate vs hop) and
extracts midsagittal X/Y per articulator in the canonical channel order.

Channel mappings (native sensor -> articulator):

- MNGU0 (EST tracks, ~200 Hz): jaw->LI, upperlip->UL, lowerlip->LL,
  T1->TT, T2->TB, T3->TD; suffixes _x/_y or _px/_py. Group EN.UK.
- MOCHA-TIMIT (EST tracks, 500 Hz): li, ul, ll, tt, tb, td map directly;
  extra channels (ui, v, bn) are ignored. Group EN.UK.
- HPRC (.mat, 100 Hz, struct arrays with NAME/SRATE/SIGNAL): JAW->LI,
  UL->UL, LL->LL, TT->TT, TB->TB, TR->TD. 3-D signals use columns 0
  (front-back) and 2 (vertical). Group EN.US.
- EMA-MAE (.mat, 400 Hz): li, ul, ll, tt, tb, td map directly; groups are
  per speaker (EN.BJ / EN.SH / EN.US) and must come from a speakers.json
  sidecar in the input directory.
- DKU-JNU-EMA (TSV, 250 Hz): li, ul, ll, tt, tb, td columns. Group MAN.
- MSPKA (TSV, 400 Hz): li, ul, ll, tt, tb, td columns. Group IT.

Out of scope (documented, not silently attempted): head-movement
correction, palate referencing, and other per-corpus post-processing
beyond channel mapping. Utterances containing NaNs are flagged and
excluded from the emitted index.

An optional ``speakers.json`` sidecar ({speaker: {"group": ..,
"gender": ..}}) overrides the layout's fixed group and supplies gender;
without it gender is recorded as unknown.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.io

from artikit.core import CHANNEL_NAMES, EmaTrajectory, Gender, Group, SpeakerMeta

from .errors import MissingChannel, UnknownLayout
from .extract import atomic_write_akf

log = logging.getLogger("artikit_extract")

ARTICULATORS = tuple(name.split(".")[0] for name in CHANNEL_NAMES[::2])
_AXIS_SUFFIXES = {"x": 0, "px": 0, "y": 1, "py": 1}


@dataclass(frozen=True)
class CorpusLayout:
    corpus: str
    reader: str                     # "est" | "mat" | "tsv"
    pattern: str
    sensor_map: dict                # native (lowercase) -> articulator
    rate: float                     # fallback when the file carries none
    group: str | None               # fixed label, or None: speakers.json
    speaker_from: str = "prefix"    # "prefix" of the stem, or "parent" dir


_DIRECT = {"li": "LI", "ul": "UL", "ll": "LL",
           "tt": "TT", "tb": "TB", "td": "TD"}

LAYOUTS = {
    "MNGU0": CorpusLayout(
        corpus="MNGU0", reader="est", pattern="**/*.ema",
        sensor_map={"jaw": "LI", "upperlip": "UL", "lowerlip": "LL",
                    "t1": "TT", "t2": "TB", "t3": "TD"},
        rate=200.0, group="EN.UK"),
    "MOCHA-TIMIT": CorpusLayout(
        corpus="MOCHA-TIMIT", reader="est", pattern="**/*.ema",
        sensor_map=dict(_DIRECT), rate=500.0, group="EN.UK"),
    "HPRC": CorpusLayout(
        corpus="HPRC", reader="mat", pattern="**/*.mat",
        sensor_map={"jaw": "LI", "ul": "UL", "ll": "LL",
                    "tt": "TT", "tb": "TB", "tr": "TD"},
        rate=100.0, group="EN.US"),
    "EMA-MAE": CorpusLayout(
        corpus="EMA-MAE", reader="mat", pattern="**/*.mat",
        sensor_map=dict(_DIRECT), rate=400.0, group=None),
    "DKU-JNU-EMA": CorpusLayout(
        corpus="DKU-JNU-EMA", reader="tsv", pattern="**/*.tsv",
        sensor_map=dict(_DIRECT), rate=250.0, group="MAN",
        speaker_from="parent"),
    "MSPKA": CorpusLayout(
        corpus="MSPKA", reader="tsv", pattern="**/*.tsv",
        sensor_map=dict(_DIRECT), rate=400.0, group="IT",
        speaker_from="parent"),
}


@dataclass
class ConversionResult:
    corpus: str
    speakers: list = field(default_factory=list)      # SpeakerMeta
    rows: list = field(default_factory=list)          # index rows
    flagged: list = field(default_factory=list)       # NaN utterances
    index_path: Path | None = None


# ---------------------------------------------------------------------------
# file readers: each returns ({sensor: (T, 2) xy array}, rate)
# ---------------------------------------------------------------------------

def _split_channel(name: str) -> tuple[str, int] | None:
    """"t3_py" -> ("t3", axis 1); None when the suffix is not an axis."""
    stem, _, suffix = name.strip().lower().rpartition("_")
    if stem and suffix in _AXIS_SUFFIXES:
        return stem, _AXIS_SUFFIXES[suffix]
    return None


def _pair_columns(names: list[str], table: np.ndarray, path: Path,
                  rate: float) -> tuple[dict, float]:
    sensors: dict[str, np.ndarray] = {}
    cols: dict[str, dict[int, int]] = {}
    for i, name in enumerate(names):
        parsed = _split_channel(name)
        if parsed is not None:
            cols.setdefault(parsed[0], {})[parsed[1]] = i
    for sensor, axes in cols.items():
        if 0 in axes and 1 in axes:
            sensors[sensor] = table[:, [axes[0], axes[1]]]
    return sensors, rate


def _read_est(path: Path, layout: CorpusLayout) -> tuple[dict, float]:
    """EST-style track subset: ASCII header, then float32 LE frames.

    Required header keys: NumFrames, NumChannels, Channel_<i> <name>;
    SampleRate overrides the layout default.
    """
    raw = path.read_bytes()
    marker = b"EST_Header_End\n"
    cut = raw.find(marker)
    if not raw.startswith(b"EST_File") or cut < 0:
        raise UnknownLayout(f"{path}: not an EST track file")
    header: dict[str, str] = {}
    for line in raw[:cut].decode("ascii", "replace").splitlines()[1:]:
        parts = line.split(None, 1)
        if len(parts) == 2:
            header[parts[0]] = parts[1].strip()
    try:
        n_frames = int(header["NumFrames"])
        n_channels = int(header["NumChannels"])
    except (KeyError, ValueError) as exc:
        raise UnknownLayout(f"{path}: EST header lacks frame/channel "
                            f"counts ({exc})") from None
    rate = float(header.get("SampleRate", layout.rate))
    blob = raw[cut + len(marker):]
    if len(blob) != n_frames * n_channels * 4:
        raise UnknownLayout(f"{path}: EST payload has {len(blob)} bytes, "
                            f"header promises {n_frames * n_channels * 4}")
    table = np.frombuffer(blob, dtype="<f4") \
        .reshape(n_frames, n_channels).astype(np.float64)
    names = [header.get(f"Channel_{i}", "") for i in range(n_channels)]
    return _pair_columns(names, table, path, rate)


def _read_mat(path: Path, layout: CorpusLayout) -> tuple[dict, float]:
    """MATLAB files: struct arrays with NAME/SRATE/SIGNAL fields, or plain
    per-sensor 2-D variables plus an optional 'srate' scalar."""
    try:
        raw = scipy.io.loadmat(path, squeeze_me=True, struct_as_record=False)
    except (OSError, ValueError, NotImplementedError) as exc:
        raise UnknownLayout(f"{path}: cannot read MATLAB file: {exc}") \
            from None
    sensors: dict[str, np.ndarray] = {}
    rate = layout.rate

    def take(name: str, signal) -> None:
        sig = np.atleast_2d(np.asarray(signal, dtype=np.float64))
        if sig.shape[0] < sig.shape[1]:  # stored transposed
            sig = sig.T
        if sig.shape[1] >= 3:
            sig = sig[:, [0, 2]]         # front-back + vertical of 3-D data
        sensors[name.strip().lower()] = sig[:, :2]

    for key, val in raw.items():
        if key.startswith("__"):
            continue
        entries = np.atleast_1d(val)
        if all(hasattr(e, "NAME") and hasattr(e, "SIGNAL") for e in entries):
            for e in entries:
                take(str(e.NAME), e.SIGNAL)
                if hasattr(e, "SRATE"):
                    rate = float(np.asarray(e.SRATE).ravel()[0])
        elif key.lower() in ("srate", "rate", "fs"):
            rate = float(np.asarray(val).ravel()[0])
        elif isinstance(val, np.ndarray) and val.ndim == 2:
            take(key, val)
    return sensors, rate


def _read_tsv(path: Path, layout: CorpusLayout) -> tuple[dict, float]:
    """Headered numeric table: first line names columns like tt_x, tt_y."""
    with open(path) as fh:
        names = fh.readline().split()
        try:
            table = np.loadtxt(fh, ndmin=2)
        except ValueError as exc:
            raise UnknownLayout(f"{path}: non-numeric TSV body: {exc}") \
                from None
    if table.shape[1] != len(names):
        raise UnknownLayout(f"{path}: header names {len(names)} columns, "
                            f"rows have {table.shape[1]}")
    return _pair_columns(names, table, path, layout.rate)


_READERS = {"est": _read_est, "mat": _read_mat, "tsv": _read_tsv}


# ---------------------------------------------------------------------------
# conversion
# ---------------------------------------------------------------------------

def _canonical_samples(sensors: dict, layout: CorpusLayout,
                       path: Path) -> np.ndarray:
    by_articulator = {art: native for native, art in layout.sensor_map.items()}
    columns = []
    length = None
    for art in ARTICULATORS:
        native = by_articulator[art]
        if native not in sensors:
            raise MissingChannel(
                f"{layout.corpus}: {path.name}: articulator {art} missing "
                f"(no usable {native!r} sensor; found "
                f"{sorted(sensors) or 'none'})")
        xy = sensors[native]
        if length is None:
            length = len(xy)
        elif len(xy) != length:
            raise UnknownLayout(f"{path}: sensor {native!r} has {len(xy)} "
                                f"frames, expected {length}")
        columns.append(xy)
    return np.hstack(columns)


def _speaker_info(speaker_id: str, layout: CorpusLayout,
                  sidecar: dict) -> tuple[str, str]:
    entry = sidecar.get(speaker_id, {})
    group = entry.get("group", layout.group)
    if group is None:
        raise UnknownLayout(
            f"{layout.corpus}: groups are per-speaker; provide speakers.json "
            f"with a group for {speaker_id!r}")
    try:
        Group(group)
    except ValueError:
        raise UnknownLayout(f"{layout.corpus}: unknown group label {group!r} "
                            f"for {speaker_id!r}") from None
    gender = entry.get("gender", Gender.UNKNOWN.value)
    try:
        Gender(gender)
    except ValueError:
        raise UnknownLayout(f"{layout.corpus}: unknown gender {gender!r} "
                            f"for {speaker_id!r}") from None
    return group, gender


def convert_corpus(corpus: str, in_dir: str | Path,
                   out_dir: str | Path) -> ConversionResult:
    """Convert one corpus directory to canonical EMA AKF files.

    Writes one AKF per clean utterance plus ``ema_index.json`` (rows of
    speaker_id / group / gender / utterance_id / ema_path, ready to join
    with extracted features into a full manifest). Returns per-speaker
    metadata and the list of NaN-flagged utterances, which are excluded
    from the index.

    Raises:
        UnknownLayout: unknown corpus name, no matching files, malformed
            file, or missing per-speaker group labels.
        MissingChannel: a required articulator sensor is absent.
    """
    if corpus not in LAYOUTS:
        raise UnknownLayout(f"unknown corpus {corpus!r}; expected one of "
                            f"{sorted(LAYOUTS)}")
    layout = LAYOUTS[corpus]
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    files = sorted(p for p in in_dir.glob(layout.pattern) if p.is_file())
    if not files:
        raise UnknownLayout(f"{corpus}: no files matching {layout.pattern!r} "
                            f"under {in_dir}")
    sidecar = {}
    sidecar_path = in_dir / "speakers.json"
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())

    out_dir.mkdir(parents=True, exist_ok=True)
    result = ConversionResult(corpus=corpus)
    minutes: dict[str, float] = {}
    info: dict[str, tuple[str, str]] = {}
    for path in files:
        speaker_id = (path.parent.name if layout.speaker_from == "parent"
                      else path.stem.split("_")[0])
        if speaker_id not in info:
            info[speaker_id] = _speaker_info(speaker_id, layout, sidecar)
        group, gender = info[speaker_id]
        sensors, rate = _READERS[layout.reader](path, layout)
        samples = _canonical_samples(sensors, layout, path)
        utterance_id = path.stem
        if not np.isfinite(samples).all():
            bad = int((~np.isfinite(samples)).sum())
            log.warning("flagging %s/%s: %d non-finite values",
                        speaker_id, utterance_id, bad)
            result.flagged.append({"speaker_id": speaker_id,
                                   "utterance_id": utterance_id,
                                   "path": str(path), "bad_values": bad})
            continue
        fname = f"{speaker_id}_{utterance_id}_ema.akf"
        atomic_write_akf(
            EmaTrajectory(speaker_id=speaker_id, utterance_id=utterance_id,
                          frame_rate=rate, samples=samples), out_dir / fname)
        minutes[speaker_id] = minutes.get(speaker_id, 0.0) \
            + len(samples) / rate / 60.0
        result.rows.append({"speaker_id": speaker_id, "group": group,
                            "gender": gender, "utterance_id": utterance_id,
                            "ema_path": fname})

    result.speakers = [
        SpeakerMeta(speaker_id=s, corpus=corpus, group=Group(info[s][0]),
                    gender=Gender(info[s][1]), minutes=m)
        for s, m in sorted(minutes.items())]
    result.index_path = out_dir / "ema_index.json"
    tmp = result.index_path.with_name(
        result.index_path.name + f".tmp{os.getpid()}")
    tmp.write_text(json.dumps(result.rows, indent=2) + "\n")
    os.replace(tmp, result.index_path)
    return result
