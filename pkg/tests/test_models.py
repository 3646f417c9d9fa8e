import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from danet import nn
from danet.errors import ConfigError, CorruptionError, FormatError, ShapeError
from danet.models import (Classifier, ClassifierConfig, DanetModel, Enhancer, EnhancerConfig,
                          build_classifier, build_danet, build_enhancer, danet_forward, danet_h_forward,
                          enhancer_forward, load_checkpoint, read_checkpoint_header, save_checkpoint)
from danet.nn import functional as F
from oracles import MINI_CLASSIFIER, MINI_ENHANCER, MINI_ENHANCER_2LEAD, frame_chain


@pytest.fixture(scope="module")
def danet():
    return build_danet(seed=3)


def test_enhancer_output_shape_and_range(danet, rng):
    x = rng.normal(size=(1, 1500))
    w = enhancer_forward(danet, x)
    assert w.shape == (1500,)
    assert np.all((w > 0) & (w < 1))


def test_enhancer_receptive_field():
    assert EnhancerConfig().receptive_field() == 1 + 4 * 56 == 225


def test_enhancer_zero_input_gives_sigmoid_bias():
    enh = build_enhancer(seed=1)
    enh.head.bias.data[...] = 0.7
    w = enh.weights(np.zeros((1, 300)))
    np.testing.assert_allclose(w, 1 / (1 + np.exp(-0.7)), atol=1e-15)


def test_enhancer_receptive_field_measured():
    """An impulse influences exactly receptive_field output frames."""
    enh = build_enhancer(EnhancerConfig(), seed=5)
    x = np.zeros((1, 600))
    base = enh.weights(x)
    x[0, 300] = 5.0
    changed = np.flatnonzero(np.abs(enh.weights(x) - base) > 0)
    assert changed.max() - changed.min() + 1 <= 225
    assert changed.min() >= 300 - 112 and changed.max() <= 300 + 112


def test_zero_init_residual_is_identity(rng):
    enh = Enhancer(EnhancerConfig(zero_init_residual=True), seed=0)
    h = nn.Tensor(rng.normal(size=(2, 6, 50)))
    np.testing.assert_array_equal(enh.block(1, h).data, h.data)
    x = nn.Tensor(rng.normal(size=(2, 1, 50)))
    np.testing.assert_allclose(enh.block(0, x).data, enh.proj(x).data, atol=0)


def test_classifier_shape_chain(rng):
    clf = build_classifier(seed=0)
    steps = clf.trace(rng.normal(size=(1, 1500)))
    frames = [s.shape[-1] for s in steps[:6]]
    assert frames == [1500, 214, 214, 35, 35, 5]
    assert steps[6].shape == (1, 25) and steps[7].shape == (1, 50) and steps[8].shape == (1, 1)
    assert ClassifierConfig().frame_chain() == frame_chain(1500, ClassifierConfig().stages) == [214, 35, 5]
    p = clf.predict(rng.normal(size=(1, 1500)))
    assert p.shape == (1,) and 0 < p[0] < 1


def test_classifier_rejects_wrong_shape(rng):
    with pytest.raises(ShapeError):
        build_classifier().predict(rng.normal(size=(1, 1000)))


def test_config_validation():
    with pytest.raises(ConfigError):
        EnhancerConfig(n_dilated_layers=3).validate()
    with pytest.raises(ConfigError):
        EnhancerConfig(kernel=4).validate()
    with pytest.raises(ConfigError):
        ClassifierConfig(input_frames=10).validate()
    with pytest.raises(ConfigError):
        DanetModel(Enhancer(EnhancerConfig(in_channels=2)), Classifier(ClassifierConfig(in_channels=2)))


def test_parameter_count_deterministic():
    a, b = build_danet(seed=0), build_danet(seed=0)
    assert a.n_parameters() == b.n_parameters()
    assert all(np.array_equal(p.data, q.data) for p, q in zip(a.parameters(), b.parameters()))
    assert all(p.trainable for p in a.parameters())


def test_danet_identity_weights_equals_classifier(danet, rng):
    x = rng.normal(size=(1, 1500))
    clf = danet.classifier
    # force the enhancer to output exactly 1 everywhere: head bias huge, weights zero
    enh = build_enhancer(seed=9)
    enh.head.weight.data[...] = 0.0
    enh.head.bias.data[...] = 800.0
    model = DanetModel(enh, clf)
    assert danet_forward(model, x) == float(clf.predict(x)[0])


def test_danet_h_equivalences(danet, rng):
    x = rng.normal(size=(1, 1500))
    clf = danet.classifier
    assert danet_h_forward(clf, x, np.ones(1500)) == float(clf.predict(x)[0])
    assert danet_h_forward(clf, x, np.zeros(1500)) == float(clf.predict(np.zeros((1, 1500)))[0])
    w2 = enhancer_forward(danet, x)
    assert abs(danet_h_forward(clf, x, w2) - danet_forward(danet, x)) <= 1e-12
    with pytest.raises(ShapeError):
        danet_h_forward(clf, x, np.ones(10))


def test_danet_pure(danet, rng):
    x = rng.normal(size=(1, 1500))
    assert danet_forward(danet, x) == danet_forward(danet, x)


def test_enhancer_gradient_nonzero_and_checked(rng):
    model = DanetModel(Enhancer(MINI_ENHANCER, 1), Classifier(MINI_CLASSIFIER, 2))
    assert model.n_parameters() <= 500
    x = rng.normal(size=(2, 1, 48))
    y = np.array([1.0, 0.0])
    loss = lambda: F.bce_loss(model(x), y)  # noqa: E731
    loss().backward()
    assert any(np.any(p.grad != 0) for p in model.enhancer.parameters())
    assert nn.check_gradients(loss, model.parameters()) < 1e-4


def test_mini_networks_gradcheck(rng):
    enh = Enhancer(MINI_ENHANCER_2LEAD, 4)
    assert enh.n_parameters() <= 500
    x = nn.Tensor(rng.normal(size=(2, 2, 30)), requires_grad=True)
    target = rng.uniform(0.3, 1.0, size=(2, 1, 30))
    assert nn.check_gradients(lambda: F.mse_loss(enh(x), target), enh.parameters() + [x]) < 1e-4
    clf = Classifier(MINI_CLASSIFIER, 5)
    assert clf.n_parameters() <= 500
    xc = rng.normal(size=(3, 1, 48))
    yc = np.array([1.0, 0.0, 1.0])
    assert nn.check_gradients(lambda: F.bce_loss(clf(xc), yc), clf.parameters()) < 1e-4


@given(c=st.floats(0.1, 10.0))
def test_linear_classifier_logit_scales(c):
    cfg = ClassifierConfig(input_frames=48, stages=[[5, 2, 2], [3, 3, 3]], hidden=4, linear=True)
    clf = Classifier(cfg, 3)
    for layer in (clf.fc, clf.out):
        layer.bias.data[...] = 0.0
    x = np.random.default_rng(0).normal(size=(1, 1, 48))
    w = np.random.default_rng(1).uniform(0.3, 1, size=48)
    base = float(clf.logit(x * w).data[0])
    scaled = float(clf.logit(c * x * w).data[0])
    # max-pooling commutes with positive scaling, so the linear network is homogeneous
    assert abs(scaled - c * base) <= 1e-9 * (1 + abs(c * base))


def test_checkpoint_round_trip(tmp_path, danet):
    danet.stage = 2
    path = save_checkpoint(danet, tmp_path / "m.dant")
    back = load_checkpoint(path)
    assert isinstance(back, DanetModel) and back.stage == 2 and back.stage_tag == "stage-2"
    for (n1, p1), (n2, p2) in zip(danet.named_parameters(), back.named_parameters()):
        assert n1 == n2 and p1.data.tobytes() == p2.data.tobytes()
    raw = path.read_bytes()
    assert raw[:4] == b"DANT" and struct.unpack("<I", raw[4:8])[0] == 1
    assert read_checkpoint_header(path)["stage"] == "stage-2"
    danet.stage = 0


def test_checkpoint_errors(tmp_path):
    clf = build_classifier(seed=0)
    path = save_checkpoint(clf, tmp_path / "c.dant", tag="baseline")
    raw = path.read_bytes()
    (tmp_path / "bad.dant").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "bad.dant")
    (tmp_path / "ver.dant").write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "ver.dant")
    (tmp_path / "short.dant").write_bytes(raw[:-8])
    with pytest.raises(CorruptionError):
        load_checkpoint(tmp_path / "short.dant")
    with pytest.raises(ConfigError):
        load_checkpoint(path, expected={"classifier": ClassifierConfig(hidden=10)})
    assert isinstance(load_checkpoint(path, expected={"classifier": ClassifierConfig()}), Classifier)
