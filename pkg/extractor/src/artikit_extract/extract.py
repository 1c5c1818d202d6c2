"""Dump per-layer transformer hidden states to AKF feature files.

Layer numbering: layer 0 is the convolutional front-end output as seen by
the first transformer block; layer N (1-based up to the model depth) is the
output of the N-th transformer block. One AKF is written per
(utterance, layer) with source "<tag>-layerN" and a 20 ms frame hop; a
corpus manifest in the primary toolkit's format is written alongside.

Writes are atomic (temp file + rename), so a crashed or concurrent job on
the same output directory never leaves a torn file behind.
"""

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from artikit.akf import write_akf, write_manifest
from artikit.core import FeatureMatrix

from .audio import TARGET_RATE, load_wav_16k
from .errors import ExtractorError, InvalidAudio, InvalidJob, ModelLoadError

log = logging.getLogger("artikit_extract")

FRAME_HOP = 0.02
REQUIRED_AUDIO_KEYS = ("speaker_id", "group", "gender", "utterance_id",
                       "wav_path", "ema_path")


@dataclass(frozen=True)
class ExtractorJob:
    """One batch extraction: a checkpoint applied to a manifest of clips."""

    model_id: str
    audio_manifest: str
    output_dir: str
    layers: tuple[int, ...] | str = "all"
    device: str = "cpu"              # "cpu" or "accelerator"
    resample: bool = False
    source_tag: str | None = None    # default: derived from model_id

    def validate(self) -> None:
        if self.device not in ("cpu", "accelerator"):
            raise InvalidJob(f"device must be cpu or accelerator, "
                             f"got {self.device!r}")
        if self.layers != "all":
            if not self.layers or not all(
                    isinstance(n, int) for n in self.layers):
                raise InvalidJob(f"layers must be 'all' or a tuple of ints, "
                                 f"got {self.layers!r}")


@dataclass
class ExtractReport:
    manifest_path: Path
    rows: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)


def model_tag(model_id: str) -> str:
    """Filesystem- and source-safe tag from a checkpoint id."""
    tail = model_id.rstrip("/").split("/")[-1].lower()
    tag = re.sub(r"[^a-z0-9._-]+", "-", tail).strip("-.")
    if not tag:
        raise InvalidJob(f"cannot derive a source tag from {model_id!r}")
    return tag


def load_model(model_id: str, device: str = "cpu"):
    """Load a frozen checkpoint in deterministic inference mode.

    The model must expose a convolutional front-end whose total stride
    over 16 kHz input yields exactly the 20 ms frame hop the downstream
    toolkit assumes.
    """
    import torch
    import transformers
    transformers.utils.logging.disable_progress_bar()
    try:
        model = transformers.AutoModel.from_pretrained(model_id)
    except Exception as exc:
        raise ModelLoadError(f"cannot load checkpoint {model_id!r}: {exc}") \
            from None
    if device == "accelerator":
        if not torch.cuda.is_available():
            raise ModelLoadError("accelerator requested but none is available")
        model = model.to("cuda")
    model.eval()
    strides = getattr(model.config, "conv_stride", None)
    if not strides:
        raise ModelLoadError(
            f"{model_id}: model config exposes no conv_stride; cannot verify "
            f"the frame hop")
    factor = math.prod(strides)
    hop = factor / TARGET_RATE
    if abs(hop - FRAME_HOP) > 1e-12:
        raise ModelLoadError(
            f"{model_id}: downsampling factor {factor} gives "
            f"{hop * 1e3:g} ms frames; the toolkit requires "
            f"{FRAME_HOP * 1e3:g} ms")
    return model


def resolve_layers(layers: tuple[int, ...] | str, depth: int) -> tuple[int, ...]:
    """Expand "all" and range-check explicit indices (0 = front-end)."""
    if layers == "all":
        return tuple(range(depth + 1))
    bad = [n for n in layers if not 0 <= n <= depth]
    if bad:
        raise InvalidJob(f"layer indices {bad} outside [0, {depth}]")
    return tuple(dict.fromkeys(layers))


def hidden_states(model, audio: np.ndarray) -> list[np.ndarray]:
    """Per-layer (T', hidden) float32 activations for one clip."""
    import torch
    x = torch.from_numpy(np.ascontiguousarray(audio, dtype=np.float32))
    x = x[None, :].to(next(model.parameters()).device)
    with torch.no_grad():
        out = model(x, output_hidden_states=True)
    states = []
    for h in out.hidden_states:
        arr = h[0].detach().cpu().numpy().astype(np.float32)
        if not np.isfinite(arr).all():
            raise InvalidAudio("model produced non-finite activations")
        states.append(arr)
    return states


def atomic_write_akf(item, path: Path) -> None:
    """write_akf through a temp file + rename so readers never see a torn file."""
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    write_akf(item, tmp)
    os.replace(tmp, path)


def _read_audio_manifest(path: Path) -> list[dict]:
    try:
        rows = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidJob(f"{path}: cannot read audio manifest: {exc}") from None
    if not isinstance(rows, list):
        raise InvalidJob(f"{path}: audio manifest must be a JSON list")
    for i, row in enumerate(rows):
        missing = [k for k in REQUIRED_AUDIO_KEYS if k not in row]
        if missing:
            raise InvalidJob(f"{path}: row {i} missing keys {missing}")
    return rows


def extract(job: ExtractorJob) -> ExtractReport:
    """Run one batch job: clips in, per-layer AKFs plus a manifest out.

    Per-clip failures (wrong rate, empty or broken audio) are logged and
    skipped; the job succeeds with whatever converted cleanly. The output
    manifest lists one row per (utterance, layer) and is written
    atomically as the final step.
    """
    job.validate()
    manifest_in = Path(job.audio_manifest)
    rows_in = _read_audio_manifest(manifest_in)
    model = load_model(job.model_id, device=job.device)
    layers = resolve_layers(job.layers, int(model.config.num_hidden_layers))
    tag = job.source_tag or model_tag(job.model_id)
    out_dir = Path(job.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = ExtractReport(manifest_path=out_dir / "manifest.json")
    for row in rows_in:
        wav_path = Path(os.path.join(manifest_in.parent, row["wav_path"]))
        try:
            audio = load_wav_16k(wav_path, resample=job.resample)
            if audio.size == 0:
                raise InvalidAudio(f"{wav_path}: zero-length audio")
            states = hidden_states(model, audio)
        except ExtractorError as exc:
            log.warning("skipping %s (%s): %s", row["utterance_id"],
                        wav_path, exc)
            report.skipped.append({"utterance_id": row["utterance_id"],
                                   "wav_path": str(wav_path),
                                   "reason": str(exc)})
            continue
        ema_path = os.path.join(os.path.dirname(str(manifest_in)),
                                row["ema_path"])
        for n in layers:
            source = f"{tag}-layer{n}"
            fname = f"{row['speaker_id']}_{row['utterance_id']}_{source}.akf"
            feat = FeatureMatrix(
                speaker_id=row["speaker_id"],
                utterance_id=row["utterance_id"], source=source,
                frame_hop=FRAME_HOP, values=states[n],
                metadata={"model_id": job.model_id, "layer": n,
                          "n_samples": int(audio.size)})
            atomic_write_akf(feat, out_dir / fname)
            report.rows.append({
                "speaker_id": row["speaker_id"], "group": row["group"],
                "gender": row["gender"],
                "utterance_id": row["utterance_id"],
                "feature_path": fname,
                "ema_path": os.path.abspath(ema_path)})

    tmp = report.manifest_path.with_name(
        report.manifest_path.name + f".tmp{os.getpid()}")
    write_manifest(report.rows, tmp)
    os.replace(tmp, report.manifest_path)
    return report


def expected_frames(n_samples: int, conv_kernel, conv_stride) -> int:
    """Frame count implied by the convolutional front-end arithmetic."""
    n = n_samples
    for k, s in zip(conv_kernel, conv_stride):
        n = (n - k) // s + 1
    return n


def job_from_args(args) -> ExtractorJob:
    layers: tuple[int, ...] | str
    if args.layers.strip().lower() == "all":
        layers = "all"
    else:
        try:
            layers = tuple(int(p) for p in args.layers.split(",") if p.strip())
        except ValueError:
            raise InvalidJob(f"--layers must be 'all' or comma-separated "
                             f"integers, got {args.layers!r}") from None
    return ExtractorJob(model_id=args.model, audio_manifest=args.manifest,
                        output_dir=args.out, layers=layers,
                        device=args.device, resample=args.resample,
                        source_tag=args.tag)
