"""Core domain types, normalization, filtering, and frame alignment."""

import numpy as np
import pytest

from artikit.core import (
    CANONICAL_CHANNELS,
    CHANNEL_NAMES,
    N_CHANNELS,
    ArticulatorChannel,
    EmaTrajectory,
    FeatureMatrix,
    align_frames,
    lowpass_filter,
    normalize_ema,
)
from artikit.errors import (
    ClipTooShortForFilter,
    CutoffAboveNyquist,
    DataError,
    DegenerateClip,
    EmptyOverlap,
    ZeroVarianceChannel,
)


def make_ema(samples, rate=50.0, **kw):
    defaults = dict(speaker_id="spk", utterance_id="utt", frame_rate=rate,
                    samples=samples)
    defaults.update(kw)
    return EmaTrajectory(**defaults)


def make_feat(values, hop=0.02, **kw):
    defaults = dict(speaker_id="spk", utterance_id="utt", source="test",
                    frame_hop=hop, values=values)
    defaults.update(kw)
    return FeatureMatrix(**defaults)


def test_canonical_channel_order():
    assert CHANNEL_NAMES == ("LI.X", "LI.Y", "UL.X", "UL.Y", "LL.X", "LL.Y",
                             "TT.X", "TT.Y", "TB.X", "TB.Y", "TD.X", "TD.Y")
    assert len(CANONICAL_CHANNELS) == N_CHANNELS == 12


def test_channel_from_name_round_trip():
    for name in CHANNEL_NAMES:
        assert ArticulatorChannel.from_name(name).name == name
    with pytest.raises(DataError):
        ArticulatorChannel.from_name("XX.Z")
    with pytest.raises(DataError):
        ArticulatorChannel.from_name("TT")


def test_ema_validation():
    with pytest.raises(DataError):
        make_ema(np.zeros((5, 11)))
    with pytest.raises(DataError):
        make_ema(np.zeros((0, 12)))
    with pytest.raises(DataError):
        make_ema(np.zeros((5, 12)), rate=0.0)
    traj = make_ema(np.zeros((5, 12)))
    with pytest.raises(ValueError):
        traj.samples[0, 0] = 1.0   # arrays are read-only after construction


def test_frame_time_conventions():
    # sample i covers [i/rate, (i+1)/rate); its timestamp is the center
    traj = make_ema(np.zeros((4, 12)), rate=50.0)
    assert np.allclose(traj.frame_times(), [0.01, 0.03, 0.05, 0.07])
    feat = make_feat(np.zeros((3, 4)), hop=0.02)
    assert np.allclose(feat.frame_times(), [0.01, 0.03, 0.05])


def test_in_canonical_order_permutes():
    rng = np.random.default_rng(0)
    samples = rng.standard_normal((30, 12))
    reversed_order = tuple(reversed(CANONICAL_CHANNELS))
    traj = make_ema(samples, channel_order=reversed_order)
    fixed = traj.in_canonical_order()
    assert fixed.channel_order == CANONICAL_CHANNELS
    assert np.array_equal(fixed.samples, samples[:, ::-1])
    # already-canonical trajectories come back unchanged
    assert make_ema(samples).in_canonical_order().samples is not None


def test_normalize_ema_population_std():
    rng = np.random.default_rng(1)
    samples = rng.standard_normal((200, 12)) * 7.5 + 3.0
    out = normalize_ema(make_ema(samples))
    assert np.allclose(out.samples.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(out.samples.std(axis=0), 1.0, atol=1e-12)  # population


def test_normalize_ema_errors():
    with pytest.raises(DegenerateClip):
        normalize_ema(make_ema(np.zeros((1, 12))))
    samples = np.random.default_rng(2).standard_normal((50, 12))
    samples[:, 7] = 4.2
    with pytest.raises(ZeroVarianceChannel) as err:
        normalize_ema(make_ema(samples))
    assert "TT.Y" in str(err.value)   # channel 7 in canonical order


def test_lowpass_in_band_passthrough():
    t = (np.arange(500) + 0.5) / 50.0
    samples = np.tile(np.sin(2 * np.pi * 1.0 * t)[:, None], (1, 12))
    out = lowpass_filter(make_ema(samples), cutoff=6.0)
    ratio = out.samples.std() / samples.std()
    assert abs(ratio - 1.0) < 0.02


def test_lowpass_stopband_attenuation():
    t = (np.arange(500) + 0.5) / 50.0
    samples = np.tile(np.sin(2 * np.pi * 20.0 * t)[:, None], (1, 12))
    out = lowpass_filter(make_ema(samples), cutoff=6.0)
    # steady-state gain: the reflective padding rings at the clip edges, so
    # the stopband figure is measured away from them
    interior = out.samples[50:-50]
    assert interior.std() < 0.01 * samples.std()


def test_lowpass_zero_phase():
    # cross-correlation between input and output peaks at lag 0
    t = (np.arange(400) + 0.5) / 50.0
    x = np.sin(2 * np.pi * 2.0 * t)
    out = lowpass_filter(make_ema(np.tile(x[:, None], (1, 12))), cutoff=6.0)
    y = out.samples[:, 0]
    lags = range(-5, 6)
    xcorr = [np.dot(x[max(0, -l):len(x) - max(0, l)],
                    y[max(0, l):len(y) - max(0, -l)]) for l in lags]
    assert lags[int(np.argmax(xcorr))] == 0


def test_lowpass_errors():
    samples = np.random.default_rng(3).standard_normal((100, 12))
    with pytest.raises(CutoffAboveNyquist):
        lowpass_filter(make_ema(samples, rate=10.0), cutoff=6.0)
    # T must exceed 3 * (filter order)
    with pytest.raises(ClipTooShortForFilter):
        lowpass_filter(make_ema(samples[:15]), cutoff=6.0)
    out = lowpass_filter(make_ema(samples[:16]), cutoff=6.0)
    assert out.n_frames == 16


def test_align_frames_identity_at_matched_rates():
    rng = np.random.default_rng(4)
    samples = rng.standard_normal((120, 12))
    traj = make_ema(samples, rate=50.0)
    feat = make_feat(rng.standard_normal((120, 8)), hop=0.02)
    ema_out, feat_out = align_frames(traj, feat)
    # 50 Hz EMA and 20 ms hops share frame centers up to 1-ulp time rounding
    assert np.allclose(ema_out.samples, samples, atol=1e-12)
    assert feat_out.n_frames == 120


def test_align_frames_downsamples_to_feature_grid():
    rng = np.random.default_rng(5)
    traj = make_ema(rng.standard_normal((200, 12)), rate=100.0)   # 2.0 s
    feat = make_feat(rng.standard_normal((120, 8)), hop=0.02)     # 2.4 s
    ema_out, feat_out = align_frames(traj, feat)
    # feature centers beyond the EMA stream (t > 1.9975) are dropped:
    # (k + 0.5) * 0.02 <= 1.9975 holds for k <= 99
    assert ema_out.n_frames == feat_out.n_frames == 100
    assert ema_out.frame_rate == pytest.approx(50.0)
    # linear interpolation is exact on a linear signal
    ramp = make_ema(np.outer(np.arange(200), np.ones(12)), rate=100.0)
    ema_out, _ = align_frames(ramp, feat)
    expected = ema_out.frame_times() * 100.0 - 0.5   # invert (i+0.5)/rate
    assert np.allclose(ema_out.samples[:, 0], expected, atol=1e-9)


def test_align_frames_empty_overlap():
    traj = make_ema(np.zeros((10, 12)), rate=100.0)   # ends at 0.1 s
    feat = make_feat(np.zeros((5, 4)), hop=1.0)       # first center at 0.5 s
    with pytest.raises(EmptyOverlap):
        align_frames(traj, feat)
