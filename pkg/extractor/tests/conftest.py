"""Shared fixtures: a tiny deterministic checkpoint, audio clips, and
miniature corpus trees in the documented published layouts."""

import json
import struct

import numpy as np
import pytest
import scipy.io
import scipy.io.wavfile

from artikit.akf import write_akf
from artikit.core import EmaTrajectory


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A seeded two-block wav2vec2-style checkpoint small enough for tests."""
    import torch
    import transformers
    from transformers import Wav2Vec2Config, Wav2Vec2Model

    transformers.utils.logging.disable_progress_bar()
    torch.manual_seed(1234)
    config = Wav2Vec2Config(hidden_size=32, num_hidden_layers=2,
                            num_attention_heads=2, intermediate_size=64,
                            conv_dim=(24,) * 7, num_conv_pos_embeddings=16,
                            num_conv_pos_embedding_groups=4, vocab_size=32)
    model = Wav2Vec2Model(config)
    out = tmp_path_factory.mktemp("tiny_model")
    model.save_pretrained(out)
    return str(out)


def write_tone_wav(path, n_samples, rate=16000, freq=440.0):
    t = np.arange(n_samples) / rate
    pcm = (0.5 * np.sin(2 * np.pi * freq * t) * 32767).astype(np.int16)
    scipy.io.wavfile.write(path, rate, pcm)


@pytest.fixture()
def audio_tree(tmp_path):
    """Three 16 kHz clips with EMA AKFs and an audio manifest."""
    rows = []
    for i, n in enumerate((32000, 24000, 16000)):
        utt = f"u{i:03d}"
        write_tone_wav(tmp_path / f"{utt}.wav", n, freq=300.0 + 40.0 * i)
        rng = np.random.default_rng(i)
        ema = EmaTrajectory(speaker_id="SPK0", utterance_id=utt,
                            frame_rate=100.0,
                            samples=rng.standard_normal((n // 160, 12)))
        write_akf(ema, tmp_path / f"{utt}_ema.akf")
        rows.append({"speaker_id": "SPK0", "group": "EN.UK", "gender": "M",
                     "utterance_id": utt, "wav_path": f"{utt}.wav",
                     "ema_path": f"{utt}_ema.akf"})
    manifest = tmp_path / "audio.json"
    manifest.write_text(json.dumps(rows))
    return manifest


# ---------------------------------------------------------------------------
# miniature corpus trees
# ---------------------------------------------------------------------------

HPRC_SENSORS = ("JAW", "UL", "LL", "TT", "TB", "TR")


def hprc_mat(path, frames=40, srate=100.0, base=10.0, drop=(),
             poison=False):
    """One HPRC-style .mat: struct array of NAME/SRATE/SIGNAL sensors.

    Sensor k's 3-D signal has x = base*k, lateral column = 999 (must be
    ignored), vertical = base*k + 1, so the canonical column values encode
    which sensor each channel came from.
    """
    keep = [s for s in HPRC_SENSORS if s not in drop]
    arr = np.zeros((len(keep),), dtype=[("NAME", "O"), ("SRATE", "O"),
                                        ("SIGNAL", "O")])
    for i, name in enumerate(keep):
        k = HPRC_SENSORS.index(name) + 1
        sig = np.column_stack([np.full(frames, base * k),
                               np.full(frames, 999.0),
                               np.full(frames, base * k + 1.0)])
        if poison and name == "TT":
            sig[3, 0] = np.nan
        arr[i] = (name, srate, sig)
    scipy.io.savemat(path, {"data": arr})


def make_hprc_tree(root, n_speakers=2):
    in_dir = root / "hprc_raw"
    in_dir.mkdir()
    for s in range(n_speakers):
        spk = f"F{s + 1:02d}"
        for b in range(2):
            hprc_mat(in_dir / f"{spk}_B{b + 1:02d}_S01_R01_N.mat")
    return in_dir


TSV_HEADER = ("li_x li_y ul_x ul_y ll_x ll_y "
              "tt_x tt_y tb_x tb_y td_x td_y")


def tsv_file(path, frames=30, poison=False):
    rng = np.random.default_rng(0)
    table = rng.standard_normal((frames, 12))
    if poison:
        table[5, 7] = np.nan
    lines = [TSV_HEADER]
    lines += [" ".join(f"{v:.6f}" for v in row) for row in table]
    path.write_text("\n".join(lines) + "\n")


def make_mspka_tree(root, speakers=("cnz_1", "lls_2")):
    in_dir = root / "mspka_raw"
    for spk in speakers:
        (in_dir / spk).mkdir(parents=True)
        for u in range(2):
            tsv_file(in_dir / spk / f"list{u + 1:02d}.tsv")
    return in_dir


MNGU0_CHANNELS = ("jaw_px jaw_py upperlip_px upperlip_py lowerlip_px "
                  "lowerlip_py T1_px T1_py T2_px T2_py T3_px T3_py "
                  "head_roll").split()


def est_file(path, frames=25, rate=200.0, channels=MNGU0_CHANNELS,
             truncate=False):
    header = ["EST_File Track", "DataType binary",
              f"NumFrames {frames}", f"NumChannels {len(channels)}",
              f"SampleRate {rate:g}"]
    header += [f"Channel_{i} {name}" for i, name in enumerate(channels)]
    header.append("EST_Header_End")
    rng = np.random.default_rng(7)
    payload = rng.standard_normal((frames, len(channels)))
    raw = ("\n".join(header) + "\n").encode("ascii") \
        + payload.astype("<f4").tobytes()
    if truncate:
        raw = raw[:-9]
    path.write_bytes(raw)


def make_mngu0_tree(root):
    in_dir = root / "mngu0_raw"
    in_dir.mkdir()
    for u in range(2):
        est_file(in_dir / f"mngu0_s1_{u:04d}.ema")
    return in_dir
