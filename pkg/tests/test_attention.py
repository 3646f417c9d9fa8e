import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from danet.attention import (RULES, DiseaseRule, apply_weights, augment_noise, augment_segment, get_rule,
                             manual_weights)
from danet.ecg_io import EcgRecord
from danet.errors import BoundsError, ConfigError, LengthError, ShapeError
from danet.fiducials import Beat, FiducialSet

APC_RULE = RULES["apc"]


def _beat(p_on, p_off, q_on):
    return Beat(r_peak=q_on + 5, qrs_onset=q_on, qrs_offset=q_on + 10, p_onset=p_on, p_offset=p_off)


def test_apc_rule_values():
    assert (APC_RULE.region, APC_RULE.in_weight, APC_RULE.base_weight) == ("P", 1.0, 0.3)


def test_single_p_span():
    w = manual_weights(FiducialSet(150.0, [_beat(100, 130, 140)]), APC_RULE, 1500)
    assert np.all(w[100:131] == 1.0)
    mask = np.ones(1500, dtype=bool)
    mask[100:131] = False
    assert np.all(w[mask] == 0.3)


def test_empty_and_absent_p():
    assert np.all(manual_weights(FiducialSet(150.0, []), APC_RULE, 50) == 0.3)
    no_p = Beat(r_peak=20, qrs_onset=15, qrs_offset=25)
    assert np.all(manual_weights(FiducialSet(150.0, [no_p]), APC_RULE, 50) == 0.3)


def test_overlapping_spans_union():
    fid = FiducialSet(150.0, [_beat(10, 30, 35), _beat(20, 40, 45)])
    w = manual_weights(fid, APC_RULE, 100)
    assert np.flatnonzero(w == 1.0).tolist() == list(range(10, 41))
    np.testing.assert_array_equal(w, manual_weights(fid, APC_RULE, 100))


def test_bounds():
    with pytest.raises(BoundsError):
        manual_weights(FiducialSet(150.0, [_beat(100, 130, 140)]), APC_RULE, 120)


def test_rule_validation_and_registry(tmp_path):
    with pytest.raises(ConfigError):
        DiseaseRule("x", "P", 0.2, 0.3)
    with pytest.raises(ConfigError):
        DiseaseRule("x", "U")
    custom = DiseaseRule("QRS-focus", "QRS", 0.9, 0.1)
    path = tmp_path / "rule.json"
    path.write_text(custom.to_json())
    assert get_rule(str(path)) == custom
    assert get_rule("stt").region == "ST"
    with pytest.raises(ConfigError):
        get_rule("nope")


def test_st_region():
    b = Beat(r_peak=20, qrs_onset=15, qrs_offset=25, t_onset=40, t_offset=60)
    w = manual_weights(FiducialSet(150.0, [b]), RULES["stt"], 80)
    assert np.flatnonzero(w == 1.0).tolist() == list(range(25, 61))


def _rec(x):
    return EcgRecord("r", 150.0, [f"L{i}" for i in range(x.shape[0])], x)


def test_apply_identity_and_scalar(rng):
    x = rng.normal(size=(2, 40))
    np.testing.assert_array_equal(apply_weights(_rec(x), np.ones(40)).samples, x)
    np.testing.assert_array_equal(apply_weights(_rec(x), np.full(40, 0.3)).samples, 0.3 * x)


def test_apply_shared_across_leads(rng):
    x = rng.normal(size=(2, 40))
    w = np.full(40, 0.3)
    w[0] = 1.0
    out = apply_weights(_rec(x), w).samples
    for i in range(2):
        np.testing.assert_array_equal(out[i], x[i] * w)
    with pytest.raises(ShapeError):
        apply_weights(_rec(x), np.ones(39))


finite = st.floats(-10, 10, allow_nan=False)
positive = st.floats(0.01, 1.0)


@given(x=arrays(np.float64, (2, 30), elements=finite), u=arrays(np.float64, 30, elements=positive),
       v=arrays(np.float64, 30, elements=positive))
def test_apply_composable(x, u, v):
    two_step = apply_weights(apply_weights(_rec(x), u), v).samples
    one_step = apply_weights(_rec(x), u * v).samples
    assert np.max(np.abs(two_step - one_step)) <= 1e-12


@given(x=arrays(np.float64, (1, 30), elements=finite), y=arrays(np.float64, (1, 30), elements=finite),
       w=arrays(np.float64, 30, elements=positive), a=finite)
def test_apply_linear(x, y, w, a):
    lhs = apply_weights(_rec(a * x + y), w).samples
    rhs = a * apply_weights(_rec(x), w).samples + apply_weights(_rec(y), w).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


@given(spans=st.lists(st.tuples(st.integers(0, 180), st.integers(1, 19)), max_size=6))
def test_two_values_and_fraction(spans):
    beats = [_beat(s, s + l, s + l + 1) for s, l in spans]
    w = manual_weights(FiducialSet(150.0, beats), APC_RULE, 200)
    assert set(np.unique(w)) <= {0.3, 1.0}
    covered = set()
    for s, l in spans:
        covered.update(range(s, s + l + 1))
    assert np.count_nonzero(w == 1.0) == len(covered)


def test_augment_segment(rng):
    x = rng.normal(size=(2, 100))
    w = np.linspace(0.3, 1.0, 100)
    same, sw = augment_segment(_rec(x), w, 100, np.random.default_rng(0))
    np.testing.assert_array_equal(same.samples, x)
    np.testing.assert_array_equal(sw, w)
    a, wa = augment_segment(_rec(x), w, 90, np.random.default_rng(5))
    b, wb = augment_segment(_rec(x), w, 90, np.random.default_rng(5))
    np.testing.assert_array_equal(a.samples, b.samples)
    start = int(np.flatnonzero(x[0] == a.samples[0, 0])[0])
    np.testing.assert_array_equal(wa, w[start:start + 90])
    np.testing.assert_array_equal(a.samples, x[:, start:start + 90])
    with pytest.raises(LengthError):
        augment_segment(_rec(x), w, 101, rng)


def test_augment_noise():
    x = np.zeros((1, 15000))
    np.testing.assert_array_equal(augment_noise(_rec(x), 0.0, np.random.default_rng(0)).samples, x)
    a = augment_noise(_rec(x), 0.1, np.random.default_rng(3)).samples
    b = augment_noise(_rec(x), 0.1, np.random.default_rng(3)).samples
    np.testing.assert_array_equal(a, b)
    assert abs(np.std(a) - 0.1) <= 0.005
