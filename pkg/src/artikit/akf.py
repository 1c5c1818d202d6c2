"""AKF interchange format, the EMA CSV alternative, and run manifests.

Binary layout (little-endian):

    magic   4 bytes  b"AKF1"
    kind    u8       0 = features, 1 = EMA
    T       u32      frame count
    D       u32      dimension (12 for EMA)
    rate    f64      frame rate in Hz (EMA) or frame hop in seconds (features)
    mlen    u32      metadata length in bytes
    meta    mlen bytes of UTF-8 JSON (speaker_id, utterance_id, source,
                     channel_order)
    data    T*D f32 values, row-major

Values are stored as f32, so a write/read round trip is bit-exact whenever
the in-memory f64 values are exactly representable in f32 (always true for
data that came in through this reader).
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import (
    CANONICAL_CHANNELS,
    CHANNEL_NAMES,
    ArticulatorChannel,
    EmaTrajectory,
    FeatureMatrix,
)
from .errors import (
    BadMagic,
    DataError,
    DimensionMismatch,
    TruncatedPayload,
    UnsupportedVersion,
)

MAGIC = b"AKF1"
KIND_FEATURES = 0
KIND_EMA = 1

_HEADER = struct.Struct("<4sBIIdI")


def write_akf(x: FeatureMatrix | EmaTrajectory, path: str | Path) -> None:
    """Write a feature matrix or EMA trajectory to an AKF file."""
    path = Path(path)
    if isinstance(x, EmaTrajectory):
        kind, rate = KIND_EMA, float(x.frame_rate)
        values = x.samples
        meta = {
            "speaker_id": x.speaker_id,
            "utterance_id": x.utterance_id,
            "source": "ema",
            "channel_order": [c.name for c in x.channel_order],
        }
    elif isinstance(x, FeatureMatrix):
        kind, rate = KIND_FEATURES, float(x.frame_hop)
        values = x.values
        meta = {
            "speaker_id": x.speaker_id,
            "utterance_id": x.utterance_id,
            "source": x.source,
            "channel_order": None,
        }
        meta.update({k: v for k, v in x.metadata.items() if k not in meta})
    else:
        raise TypeError(f"cannot serialize {type(x).__name__} as AKF")
    t, d = values.shape
    meta_blob = json.dumps(meta, ensure_ascii=False).encode("utf-8")
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, kind, t, d, rate, len(meta_blob)))
        fh.write(meta_blob)
        fh.write(payload)


def read_akf(path: str | Path) -> FeatureMatrix | EmaTrajectory:
    """Read an AKF file back into its in-memory form.

    Raises:
        BadMagic / UnsupportedVersion: wrong magic bytes or format version.
        TruncatedPayload: file shorter than the header promises.
        DimensionMismatch: zero dims or trailing bytes beyond T*D values.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: cannot read AKF file: {exc}") from None
    if len(raw) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the AKF header")
    magic, kind, t, d, rate, mlen = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        if magic[:3] == MAGIC[:3]:
            raise UnsupportedVersion(f"{path}: unsupported AKF version {magic!r}")
        raise BadMagic(f"{path}: not an AKF file (magic {magic!r})")
    if t == 0 or d == 0:
        raise DimensionMismatch(f"{path}: header declares T={t}, D={d}")
    if kind not in (KIND_FEATURES, KIND_EMA):
        raise UnsupportedVersion(f"{path}: unknown payload kind {kind}")
    offset = _HEADER.size
    if len(raw) < offset + mlen:
        raise TruncatedPayload(f"{path}: metadata blob truncated")
    try:
        meta = json.loads(raw[offset:offset + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: metadata is not valid JSON: {exc}") from None
    offset += mlen
    expected = t * d * 4
    body = raw[offset:]
    if len(body) < expected:
        raise TruncatedPayload(
            f"{path}: payload has {len(body)} bytes, header promises {expected}")
    if len(body) > expected:
        raise DimensionMismatch(
            f"{path}: {len(body) - expected} trailing bytes beyond T*D values")
    values = np.frombuffer(body, dtype="<f4").reshape(t, d).astype(np.float64)
    speaker = meta.get("speaker_id", "")
    utt = meta.get("utterance_id", "")
    if kind == KIND_EMA:
        order = meta.get("channel_order") or CHANNEL_NAMES
        channels = tuple(ArticulatorChannel.from_name(n) for n in order)
        return EmaTrajectory(speaker_id=speaker, utterance_id=utt,
                             frame_rate=rate, samples=values,
                             channel_order=channels)
    extra = {k: v for k, v in meta.items()
             if k not in ("speaker_id", "utterance_id", "source", "channel_order")}
    return FeatureMatrix(speaker_id=speaker, utterance_id=utt,
                         source=meta.get("source", ""), frame_hop=rate,
                         values=values, metadata=extra)


def read_akf_source(path: str | Path) -> str:
    """Read only the source string from an AKF header (cheap probe)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TruncatedPayload(f"{path}: file shorter than the AKF header")
        magic, kind, _, _, _, mlen = _HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagic(f"{path}: not an AKF file (magic {magic!r})")
        meta = json.loads(fh.read(mlen).decode("utf-8"))
    return "ema" if kind == KIND_EMA else meta.get("source", "")


# ---------------------------------------------------------------------------
# CSV alternative for EMA
# ---------------------------------------------------------------------------

def write_ema_csv(traj: EmaTrajectory, path: str | Path,
                  sidecar: str | Path | None = None) -> None:
    """Write EMA as a 12-column CSV in canonical channel order.

    Frame rate and speaker metadata go into a JSON sidecar
    (default: same path with a .json suffix appended).
    """
    path = Path(path)
    sidecar = Path(sidecar) if sidecar else path.with_suffix(path.suffix + ".json")
    canon = traj.in_canonical_order()
    header = ",".join(CHANNEL_NAMES)
    rows = "\n".join(",".join(repr(float(v)) for v in row)
                     for row in canon.samples)
    path.write_text(header + "\n" + rows + "\n")
    sidecar.write_text(json.dumps({
        "speaker_id": traj.speaker_id,
        "utterance_id": traj.utterance_id,
        "frame_rate": traj.frame_rate,
    }, indent=2) + "\n")


def read_ema_csv(path: str | Path,
                 sidecar: str | Path | None = None) -> EmaTrajectory:
    path = Path(path)
    sidecar = Path(sidecar) if sidecar else path.with_suffix(path.suffix + ".json")
    if not sidecar.exists():
        raise DataError(f"{path}: missing JSON sidecar {sidecar}")
    meta = json.loads(sidecar.read_text())
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    if sorted(header) != sorted(CHANNEL_NAMES):
        raise DataError(f"{path}: CSV header is not the 12 canonical channels")
    values = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    channels = tuple(ArticulatorChannel.from_name(n) for n in header)
    traj = EmaTrajectory(speaker_id=meta.get("speaker_id", ""),
                         utterance_id=meta.get("utterance_id", ""),
                         frame_rate=float(meta["frame_rate"]),
                         samples=values, channel_order=channels)
    return traj.in_canonical_order()


# ---------------------------------------------------------------------------
# manifests
# ---------------------------------------------------------------------------

def write_manifest(rows: list[dict], path: str | Path) -> None:
    """Write a manifest: JSON array of utterance records.

    Each row: {speaker_id, group, gender, utterance_id, feature_path, ema_path}.
    Paths are kept as given (normally relative to the manifest's directory).
    """
    Path(path).write_text(json.dumps(rows, indent=2) + "\n")


REQUIRED_MANIFEST_KEYS = ("speaker_id", "group", "gender", "utterance_id",
                          "feature_path", "ema_path")


def read_manifest(path: str | Path) -> list[dict]:
    """Read and validate a manifest; resolves paths against its directory."""
    path = Path(path)
    try:
        rows = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"{path}: cannot read manifest: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: manifest is not valid JSON: {exc}") from None
    if not isinstance(rows, list):
        raise DataError(f"{path}: manifest must be a JSON array")
    base = path.parent
    out = []
    for i, row in enumerate(rows):
        missing = [k for k in REQUIRED_MANIFEST_KEYS if k not in row]
        if missing:
            raise DataError(f"{path}: row {i} missing keys {missing}")
        row = dict(row)
        row["feature_path"] = str(base / row["feature_path"])
        row["ema_path"] = str(base / row["ema_path"])
        out.append(row)
    return out
