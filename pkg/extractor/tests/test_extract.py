"""Extraction: valid AKF output, frame arithmetic, determinism, skips."""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from conftest import write_tone_wav

from artikit.akf import read_akf, read_manifest
from artikit.core import FeatureMatrix
from artikit_extract import (
    ExtractorJob,
    InvalidJob,
    ModelLoadError,
    extract,
    load_model,
)
from artikit_extract.cli import main_extract
from artikit_extract.extract import expected_frames, model_tag, resolve_layers

# conv front-end arithmetic of the fixture checkpoint: 32000 samples = 2 s
# at a 320x downsampling -> 99 frames (and 74 / 49 for the shorter clips)
FROZEN_FRAMES = {"u000": 99, "u001": 74, "u002": 49}


def run_job(tiny_model_dir, audio_tree, out_dir, **overrides):
    kwargs = dict(model_id=tiny_model_dir, audio_manifest=str(audio_tree),
                  output_dir=str(out_dir), layers="all", source_tag="tiny")
    kwargs.update(overrides)
    return extract(ExtractorJob(**kwargs))


def test_extract_emits_valid_akf(tiny_model_dir, audio_tree, tmp_path):
    out = tmp_path / "feats"
    report = run_job(tiny_model_dir, audio_tree, out)
    assert not report.skipped
    assert len(report.rows) == 3 * 3          # 3 clips x (front-end + 2 blocks)

    rows = read_manifest(report.manifest_path)
    assert len(rows) == 9
    seen_sources = set()
    for row in rows:
        feat = read_akf(row["feature_path"])
        assert isinstance(feat, FeatureMatrix)
        assert feat.frame_hop == 0.02
        assert feat.values.shape == (FROZEN_FRAMES[feat.utterance_id], 32)
        assert np.isfinite(feat.values).all()
        assert feat.metadata["layer"] in (0, 1, 2)
        seen_sources.add(feat.source)
        ema = read_akf(row["ema_path"])
        assert ema.utterance_id == feat.utterance_id
    assert seen_sources == {"tiny-layer0", "tiny-layer1", "tiny-layer2"}


def test_frame_counts_match_downsampling_arithmetic(tiny_model_dir,
                                                    audio_tree, tmp_path):
    from transformers import AutoConfig
    cfg = AutoConfig.from_pretrained(tiny_model_dir)
    assert int(np.prod(cfg.conv_stride)) == 320
    report = run_job(tiny_model_dir, audio_tree, tmp_path / "feats",
                     layers=(1,))
    for row in report.rows:
        feat = read_akf(Path(report.manifest_path).parent /
                        row["feature_path"])
        n = feat.metadata["n_samples"]
        assert feat.values.shape[0] == expected_frames(
            n, cfg.conv_kernel, cfg.conv_stride)
        assert abs(feat.values.shape[0] - n / 320) <= 2


def test_repeat_extraction_bit_identical(tiny_model_dir, audio_tree,
                                         tmp_path):
    first = run_job(tiny_model_dir, audio_tree, tmp_path / "a")
    second = run_job(tiny_model_dir, audio_tree, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").glob("*.akf"))
    assert names == sorted(p.name for p in (tmp_path / "b").glob("*.akf"))
    assert len(names) == len(first.rows) == len(second.rows)
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes(), name


def test_zero_length_clip_skipped_with_diagnostic(tiny_model_dir, audio_tree,
                                                  tmp_path):
    rows = json.loads(audio_tree.read_text())
    write_tone_wav(audio_tree.parent / "empty.wav", 0)
    rows.append(dict(rows[0], utterance_id="u_empty", wav_path="empty.wav"))
    audio_tree.write_text(json.dumps(rows))

    report = run_job(tiny_model_dir, audio_tree, tmp_path / "feats")
    assert [s["utterance_id"] for s in report.skipped] == ["u_empty"]
    assert "zero-length" in report.skipped[0]["reason"]
    kept = {row["utterance_id"] for row in read_manifest(report.manifest_path)}
    assert kept == {"u000", "u001", "u002"}


def test_wrong_rate_skipped_unless_resampled(tiny_model_dir, audio_tree,
                                             tmp_path):
    rows = json.loads(audio_tree.read_text())
    write_tone_wav(audio_tree.parent / "slow.wav", 8000, rate=8000)
    rows.append(dict(rows[0], utterance_id="u_slow", wav_path="slow.wav"))
    audio_tree.write_text(json.dumps(rows))

    report = run_job(tiny_model_dir, audio_tree, tmp_path / "strict")
    assert [s["utterance_id"] for s in report.skipped] == ["u_slow"]
    assert "8000 Hz" in report.skipped[0]["reason"]

    report2 = run_job(tiny_model_dir, audio_tree, tmp_path / "loose",
                      resample=True, layers=(0,))
    assert not report2.skipped
    by_utt = {r["utterance_id"]: r for r in report2.rows}
    feat = read_akf(tmp_path / "loose" / by_utt["u_slow"]["feature_path"])
    # 1 s of audio resampled to 16 kHz -> about 16000/320 = 50 frames
    assert abs(feat.values.shape[0] - 50) <= 2


def test_layer_selection_and_validation(tiny_model_dir, audio_tree, tmp_path):
    report = run_job(tiny_model_dir, audio_tree, tmp_path / "feats",
                     layers=(0, 2))
    sources = {row["feature_path"].rsplit("_", 1)[1] for row in report.rows}
    assert sources == {"tiny-layer0.akf", "tiny-layer2.akf"}
    with pytest.raises(InvalidJob):
        run_job(tiny_model_dir, audio_tree, tmp_path / "x", layers=(5,))
    with pytest.raises(InvalidJob):
        ExtractorJob(model_id="m", audio_manifest="a", output_dir="o",
                     device="tpu").validate()
    assert resolve_layers("all", 2) == (0, 1, 2)
    assert resolve_layers((2, 0, 2), 2) == (2, 0)


def test_model_and_manifest_errors(tiny_model_dir, tmp_path):
    with pytest.raises(ModelLoadError):
        load_model(str(tmp_path / "no_such_checkpoint"))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps([{"speaker_id": "S", "wav_path": "x.wav"}]))
    with pytest.raises(InvalidJob):
        extract(ExtractorJob(model_id=tiny_model_dir,
                             audio_manifest=str(bad),
                             output_dir=str(tmp_path / "o")))


def test_model_tag_sanitization():
    assert model_tag("facebook/wav2vec2-xls-r-300m") == "wav2vec2-xls-r-300m"
    assert model_tag("/tmp/My Model v2/") == "my-model-v2"
    with pytest.raises(InvalidJob):
        model_tag("///")


def test_cli_extract(tiny_model_dir, audio_tree, tmp_path, capsys):
    code = main_extract(["--model", tiny_model_dir, "--layers", "0,1",
                         "--manifest", str(audio_tree),
                         "--out", str(tmp_path / "feats"), "--tag", "tiny"])
    assert code == 0
    out = capsys.readouterr().out
    assert "wrote 6 feature files" in out
    assert (tmp_path / "feats" / "manifest.json").exists()

    code = main_extract(["--model", str(tmp_path / "missing"),
                         "--manifest", str(audio_tree),
                         "--out", str(tmp_path / "f2")])
    assert code == 2
    assert "error:" in capsys.readouterr().err
