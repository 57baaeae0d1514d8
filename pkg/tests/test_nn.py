import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blab.data import Dataset
from blab.nn import (TrainConfig, accuracy, forward, grad_input, init_network,
                     load_checkpoint, log_softmax, loss_nll, margin,
                     margin_batch, save_checkpoint, train)
from helpers import linear_net


def test_init_determinism_and_validation():
    a = init_network([3, 8, 2], seed=5)
    b = init_network([3, 8, 2], seed=5)
    for wa, wb in zip(a.weights, b.weights):
        np.testing.assert_array_equal(wa, wb)
    assert all((bias == 0).all() for bias in a.biases)
    assert not np.array_equal(a.weights[0], init_network([3, 8, 2], seed=6).weights[0])
    for bad in ([3], [3, 8, 3], [3, 0, 2], [3, -1, 2]):
        with pytest.raises(ValueError):
            init_network(bad, seed=0)


def test_margin_is_logit_difference():
    net = init_network([4, 6, 2], seed=1)
    x = np.array([0.3, -1.2, 0.5, 2.0])
    logits = forward(net, x)
    assert margin(net, x) == pytest.approx(logits[1] - logits[0])
    np.testing.assert_allclose(margin_batch(net, x[None, :]), [margin(net, x)])


def test_forward_rejects_wrong_dimension():
    net = init_network([4, 6, 2], seed=1)
    with pytest.raises(ValueError):
        forward(net, np.zeros(3))


def test_linear_net_margin():
    net = linear_net([2.0, -1.0], 0.5)
    assert margin(net, [1.0, 1.0]) == pytest.approx(1.5)
    np.testing.assert_allclose(grad_input(net, [1.0, 1.0]), [2.0, -1.0])


def test_loss_nll_frozen_values():
    # two equal logits: -ln(1/2)
    assert loss_nll([0.0, 0.0], 0) == pytest.approx(math.log(2.0), rel=1e-12)
    # softmax of (0, ln 3) puts 3/4 on class 1
    assert loss_nll([0.0, math.log(3.0)], 1) == pytest.approx(0.2876820724517809, rel=1e-12)
    with pytest.raises(ValueError):
        loss_nll([np.inf, 0.0], 0)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
def test_log_softmax_normalizes(logits):
    p = np.exp(log_softmax(np.array(logits)))
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert (p >= 0).all()


def test_grad_input_matches_finite_differences():
    net = init_network([3, 10, 10, 2], seed=9)
    rng = np.random.default_rng(4)
    step = 1e-6
    for _ in range(10):
        x = rng.standard_normal(3)
        g = grad_input(net, x)
        for i in range(3):
            hi, lo = x.copy(), x.copy()
            hi[i] += step
            lo[i] -= step
            fd = (margin(net, hi) - margin(net, lo)) / (2 * step)
            assert g[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_accuracy_zero_margin_counts_wrong():
    net = linear_net([1.0, 0.0], 0.0)
    data = Dataset(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([0, 1]))
    assert accuracy(net, data) == 0.0  # both samples sit exactly on the boundary


def test_train_reaches_criterion_and_is_deterministic(easy_blobs):
    cfg = TrainConfig(learning_rate=1e-2, max_epochs=2000, batch_size=16,
                      accuracy_target=0.95, seed=11)
    net_a = init_network([2, 16, 2], seed=3)
    report = train(net_a, easy_blobs, cfg)
    assert report.stopped_reason == "criterion_met"
    assert report.final_train_accuracy == 1.0
    assert accuracy(net_a, easy_blobs) == 1.0  # holds on raw, unstandardized inputs
    net_b = init_network([2, 16, 2], seed=3)
    train(net_b, easy_blobs, cfg)
    for wa, wb in zip(net_a.weights, net_b.weights):
        np.testing.assert_array_equal(wa, wb)


def test_train_sgd_momentum(easy_blobs):
    cfg = TrainConfig(optimizer="sgd_momentum", learning_rate=5e-3,
                      max_epochs=3000, batch_size=16, accuracy_target=0.95, seed=1)
    net = init_network([2, 16, 2], seed=3)
    report = train(net, easy_blobs, cfg)
    assert report.stopped_reason == "criterion_met"


def test_train_validates_inputs(easy_blobs):
    net = init_network([2, 8, 2], seed=0)
    with pytest.raises(ValueError):
        train(net, easy_blobs, TrainConfig(optimizer="adagrad"))
    with pytest.raises(ValueError):
        train(net, easy_blobs, TrainConfig(learning_rate=-1.0))
    single = Dataset(easy_blobs.samples[:5], np.zeros(5))
    with pytest.raises(ValueError):
        train(net, single, TrainConfig())


def test_checkpoint_roundtrip_bit_exact(tmp_path, easy_blobs):
    net = init_network([2, 16, 8, 2], seed=21)
    train(net, easy_blobs, TrainConfig(max_epochs=50, seed=2))
    path = tmp_path / "net.blab"
    save_checkpoint(net, path)
    back = load_checkpoint(path)
    assert back.layer_dims == net.layer_dims
    for wa, wb, ba, bb in zip(net.weights, back.weights, net.biases, back.biases):
        np.testing.assert_array_equal(wa, wb)
        np.testing.assert_array_equal(ba, bb)


def test_checkpoint_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.blab"
    bad.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(bad)
    net = init_network([2, 2], seed=0)
    path = tmp_path / "v.blab"
    save_checkpoint(net, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 99  # version field
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)
