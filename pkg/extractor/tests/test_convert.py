"""Corpus converters: channel mapping, labels, flagging, error taxonomy."""

import json

import numpy as np
import pytest
import scipy.io

from conftest import (
    est_file,
    hprc_mat,
    make_hprc_tree,
    make_mngu0_tree,
    make_mspka_tree,
    tsv_file,
)

from artikit.akf import read_akf
from artikit.core import CHANNEL_NAMES, EmaTrajectory
from artikit_extract import MissingChannel, UnknownLayout, convert_corpus
from artikit_extract.cli import main_convert


def test_hprc_channel_mapping_and_group(tmp_path):
    in_dir = make_hprc_tree(tmp_path)
    result = convert_corpus("HPRC", in_dir, tmp_path / "out")
    assert len(result.rows) == 4
    assert {r["group"] for r in result.rows} == {"EN.US"}
    assert [m.speaker_id for m in result.speakers] == ["F01", "F02"]
    assert all(m.corpus == "HPRC" and m.minutes > 0 for m in result.speakers)

    ema = read_akf(tmp_path / "out" / result.rows[0]["ema_path"])
    assert isinstance(ema, EmaTrajectory)
    assert ema.frame_rate == 100.0
    assert ema.samples.shape == (40, 12)
    # fixture encodes the source sensor in each value: sensor k contributes
    # x = 10k, y = 10k + 1, with the lateral (middle) column poisoned, so
    # this pins JAW->LI, TR->TD, the X/Y order, and the 3-D column choice
    want = [10.0, 11.0, 20.0, 21.0, 30.0, 31.0,
            40.0, 41.0, 50.0, 51.0, 60.0, 61.0]
    assert np.array_equal(ema.samples[0], want)
    assert CHANNEL_NAMES[0] == "LI.X" and CHANNEL_NAMES[-1] == "TD.Y"

    index = json.loads((tmp_path / "out" / "ema_index.json").read_text())
    assert index == result.rows


def test_hprc_missing_sensor_names_articulator(tmp_path):
    in_dir = tmp_path / "raw"
    in_dir.mkdir()
    hprc_mat(in_dir / "F01_B01_S01_R01_N.mat", drop=("TT",))
    with pytest.raises(MissingChannel) as err:
        convert_corpus("HPRC", in_dir, tmp_path / "out")
    assert "TT" in str(err.value)


def test_mspka_labels_and_speakers(tmp_path):
    in_dir = make_mspka_tree(tmp_path)
    result = convert_corpus("MSPKA", in_dir, tmp_path / "out")
    assert {r["group"] for r in result.rows} == {"IT"}
    assert [m.speaker_id for m in result.speakers] == ["cnz_1", "lls_2"]
    ema = read_akf(tmp_path / "out" / result.rows[0]["ema_path"])
    assert ema.frame_rate == 400.0
    assert ema.samples.shape == (30, 12)


def test_mngu0_est_reader(tmp_path):
    in_dir = make_mngu0_tree(tmp_path)
    result = convert_corpus("MNGU0", in_dir, tmp_path / "out")
    assert {r["group"] for r in result.rows} == {"EN.UK"}
    assert [m.speaker_id for m in result.speakers] == ["mngu0"]
    ema = read_akf(tmp_path / "out" / result.rows[0]["ema_path"])
    assert ema.frame_rate == 200.0
    assert ema.samples.shape == (25, 12)
    assert np.isfinite(ema.samples).all()


def test_nan_utterances_flagged_and_excluded(tmp_path):
    in_dir = tmp_path / "raw" / "spk1"
    in_dir.mkdir(parents=True)
    tsv_file(in_dir / "clean.tsv")
    tsv_file(in_dir / "broken.tsv", poison=True)
    result = convert_corpus("MSPKA", tmp_path / "raw", tmp_path / "out")
    assert [r["utterance_id"] for r in result.rows] == ["clean"]
    assert [f["utterance_id"] for f in result.flagged] == ["broken"]
    assert result.flagged[0]["bad_values"] == 1
    assert not (tmp_path / "out" / "spk1_broken_ema.akf").exists()


def test_unknown_layout_cases(tmp_path):
    with pytest.raises(UnknownLayout):
        convert_corpus("XRMB", tmp_path, tmp_path / "out")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(UnknownLayout):
        convert_corpus("HPRC", empty, tmp_path / "out")
    bad = tmp_path / "bad"
    bad.mkdir()
    est_file(bad / "mngu0_s1_0000.ema", truncate=True)
    with pytest.raises(UnknownLayout):
        convert_corpus("MNGU0", bad, tmp_path / "out")


def test_ema_mae_requires_speaker_groups(tmp_path):
    in_dir = tmp_path / "raw"
    in_dir.mkdir()
    rng = np.random.default_rng(3)
    scipy_vars = {s: rng.standard_normal((20, 2)) for s in
                  ("li", "ul", "ll", "tt", "tb", "td")}
    scipy_vars["srate"] = 400.0
    scipy.io.savemat(in_dir / "BJ01_u01.mat", scipy_vars)
    with pytest.raises(UnknownLayout) as err:
        convert_corpus("EMA-MAE", in_dir, tmp_path / "out")
    assert "speakers.json" in str(err.value)

    (in_dir / "speakers.json").write_text(json.dumps(
        {"BJ01": {"group": "EN.BJ", "gender": "F"}}))
    result = convert_corpus("EMA-MAE", in_dir, tmp_path / "out")
    assert result.rows[0]["group"] == "EN.BJ"
    assert result.rows[0]["gender"] == "F"
    assert result.speakers[0].gender.value == "F"


def test_cli_convert(tmp_path, capsys):
    in_dir = make_hprc_tree(tmp_path)
    code = main_convert(["--corpus", "HPRC", "--in", str(in_dir),
                         "--out", str(tmp_path / "out")])
    assert code == 0
    out = capsys.readouterr().out
    assert "4 utterances from 2 speaker(s)" in out
    assert "group EN.US" in out

    code = main_convert(["--corpus", "MSPKA", "--in", str(tmp_path / "none"),
                         "--out", str(tmp_path / "out2")])
    assert code == 2
    assert "error:" in capsys.readouterr().err
