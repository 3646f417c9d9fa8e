import numpy as np
import pytest
from hypothesis import given, strategies as st

from danet.ecg_io import EcgRecord
from danet.errors import ConfigError, LeadError, NyquistError
from danet.signal_pipeline import (PreprocessConfig, bandpass, preprocess, resample, select_leads,
                                   zscore)

EIGHT = ["I", "II", "V1", "V2", "V3", "V4", "V5", "V6"]


def tone(freq, fs, n, amp=1.0, leads=("II",)):
    t = np.arange(n) / fs
    return EcgRecord("tone", fs, list(leads), np.tile(amp * np.sin(2 * np.pi * freq * t), (len(leads), 1)))


def dft_amplitude(x, fs, freq):
    """Single-bin DFT amplitude at ``freq`` (x spans a whole number of periods)."""
    t = np.arange(len(x)) / fs
    return 2 * np.abs(np.sum(x * np.exp(-2j * np.pi * freq * t))) / len(x)


def test_resample_length_500_to_150():
    out = resample(tone(5, 500, 5000), 150)
    assert out.n_frames == 1500 and out.fs == 150


def test_resample_identity():
    rec = tone(5, 500, 777)
    np.testing.assert_allclose(resample(rec, 500).samples, rec.samples, atol=1e-9)


def test_resample_tone_matches_analytic_sine():
    out = resample(tone(5, 500, 5000), 150)
    t = np.arange(out.n_frames) / 150
    ref = np.sin(2 * np.pi * 5 * t)
    lo, hi = int(0.1 * out.n_frames), int(0.9 * out.n_frames)
    rms = np.sqrt(np.mean((out.samples[0, lo:hi] - ref[lo:hi]) ** 2))
    assert rms < 1e-3


def test_resample_upsampling_length():
    assert resample(tone(5, 150, 1500), 500).n_frames == 5000


def test_resample_empty():
    with pytest.raises(Exception):
        resample(EcgRecord("e", 500, ["I"], np.zeros((1, 0))), 150)


def test_bandpass_rejects_dc():
    rec = EcgRecord("dc", 150, ["II"], np.ones((1, 6000)))
    out = bandpass(rec, 0.5, 50, 6).samples[0]
    assert np.mean(np.abs(out[1500:-1500])) < 1e-3


def test_bandpass_passband_and_stopband():
    n = 150 * 60
    keep = bandpass(tone(10, 150, n), 0.5, 50, 6).samples[0]
    assert abs(dft_amplitude(keep, 150, 10) - 1.0) <= 0.05
    stop = bandpass(tone(70, 150, n), 0.5, 50, 6).samples[0]
    assert 20 * np.log10(dft_amplitude(stop, 150, 70)) <= -20


@pytest.mark.parametrize("edge", [0.5, 50.0])
def test_band_edge_gain_two_pass(edge):
    n = 150 * 400
    out = bandpass(tone(edge, 150, n), 0.5, 50, 6).samples[0]
    mid = slice(n // 4, 3 * n // 4)
    t = np.arange(n)[mid] / 150
    # fit the interior to a sinusoid at ``edge`` to avoid transient leakage
    basis = np.stack([np.sin(2 * np.pi * edge * t), np.cos(2 * np.pi * edge * t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, out[mid], rcond=None)
    gain_db = 20 * np.log10(np.hypot(*coef))
    assert -7 <= gain_db <= -5


def test_bandpass_zero_phase():
    x = np.zeros(3000)
    x[200::300] = 1.0
    out = bandpass(EcgRecord("p", 150, ["II"], x[None]), 0.5, 50, 6).samples[0]
    xc = np.correlate(out, x, mode="full")
    assert int(np.argmax(xc)) - (len(x) - 1) == 0


def test_bandpass_nyquist():
    with pytest.raises(NyquistError):
        bandpass(tone(5, 100, 1000), 0.5, 50, 6)


def test_select_leads():
    rec = tone(5, 500, 100, leads=EIGHT)
    one = select_leads(rec, ["II"])
    assert one.n_leads == 1 and one.n_frames == 100
    same = select_leads(rec, EIGHT)
    np.testing.assert_array_equal(same.samples, rec.samples)
    with pytest.raises(LeadError):
        select_leads(rec, ["XX"])


def test_preprocess_default_shape():
    rec = tone(5, 500, 5000, leads=EIGHT)
    out = preprocess(rec, PreprocessConfig())
    assert (out.n_leads, out.n_frames, out.fs) == (1, 1500, 150)


def test_preprocess_noop_config(rng):
    rec = EcgRecord("x", 500, ["I", "II"], rng.normal(size=(2, 400)))
    cfg = PreprocessConfig(target_fs=None, band=None, leads_keep=None)
    np.testing.assert_allclose(preprocess(rec, cfg).samples, rec.samples, atol=1e-9)
    same_fs = PreprocessConfig(target_fs=500, band=None, leads_keep=["I", "II"])
    np.testing.assert_allclose(preprocess(rec, same_fs).samples, rec.samples, atol=1e-9)


def test_zscore_constant_gives_zeros():
    rec = EcgRecord("c", 150, ["II"], np.full((1, 100), 3.0))
    np.testing.assert_array_equal(zscore(rec).samples, 0.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        PreprocessConfig(filter_order=5)
    with pytest.raises(NyquistError):
        PreprocessConfig(target_fs=90)
    with pytest.raises(ConfigError):
        PreprocessConfig(band=(10, 5))
    cfg = PreprocessConfig()
    assert PreprocessConfig.from_dict(cfg.to_dict()) == cfg


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 2**16))
def test_linearity(a, b, seed):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=(1, 1000)), r.normal(size=(1, 1000))

    def f(s):
        return bandpass(resample(EcgRecord("l", 500, ["II"], s), 150), 0.5, 50, 6).samples

    lhs = f(a * x + b * y)
    rhs = a * f(x) + b * f(y)
    scale = max(np.max(np.abs(rhs)), 1e-12)
    assert np.max(np.abs(lhs - rhs)) <= 1e-6 * scale + 1e-12
