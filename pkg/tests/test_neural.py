import math

import numpy as np
import pytest

from qcartpole.neural import (
    AdamState,
    DenseLayer,
    Mlp,
    StaleCacheError,
    adam_step,
    backward,
    forward,
    huber,
    huber_grad,
    softmax,
    softmax_logprob,
)


def one_by_one(w, b, act):
    return Mlp([DenseLayer(np.array([[w]]), np.array([b]), act)])


def test_forward_zero_net():
    net = Mlp.zeros([3, 5, 2])
    out, _ = forward(net, np.array([1.0, -2.0, 3.0]))
    assert np.array_equal(out, np.zeros(2))


def test_forward_relu_clamp_and_affine():
    assert forward(one_by_one(1.0, 0.0, "relu"), [-3.0])[0][0] == 0.0
    assert forward(one_by_one(2.0, 1.0, "identity"), [3.0])[0][0] == 7.0


def test_forward_dimension_mismatch():
    with pytest.raises(ValueError):
        forward(Mlp.zeros([3, 2]), np.ones(4))
    with pytest.raises(ValueError):
        Mlp([DenseLayer(np.zeros((4, 3)), np.zeros(4)), DenseLayer(np.zeros((2, 5)), np.zeros(2))])


def test_backward_single_layer():
    net = one_by_one(2.5, 0.3, "identity")
    _, cache = forward(net, [1.7])
    g = backward(net, cache, [1.0])
    assert g.weights[0][0, 0] == pytest.approx(1.7)
    assert g.biases[0][0] == pytest.approx(1.0)
    assert g.input[0] == pytest.approx(2.5)


def test_backward_relu_blocks_negative_units():
    net = Mlp([DenseLayer(np.array([[1.0], [-1.0]]), np.zeros(2), "relu"), DenseLayer(np.ones((1, 2)), np.zeros(1))])
    _, cache = forward(net, [2.0])
    g = backward(net, cache, [1.0])
    assert g.weights[0][1, 0] == 0.0 and g.biases[0][1] == 0.0
    assert g.weights[0][0, 0] == pytest.approx(2.0)


def test_stale_cache_detected(rng):
    net = Mlp.init([3, 4, 2], rng)
    _, cache = forward(net, np.ones(3))
    net.version += 1
    with pytest.raises(StaleCacheError):
        backward(net, cache, np.ones(2))


def numeric_grads(net, x, out_weights, h=1e-5):
    """Central differences of L = sum(out_weights * net(x)) w.r.t. every parameter and x."""

    def loss():
        return float(np.sum(out_weights * forward(net, x)[0]))

    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = loss()
            p[idx] = old - h
            down = loss()
            p[idx] = old
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    gx = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = loss()
        x[idx] = old - h
        down = loss()
        x[idx] = old
        gx[idx] = (up - down) / (2 * h)
    return grads, gx


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-8)


@pytest.mark.parametrize("seed", range(20))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(1, 6)) for _ in range(4)]
    net = Mlp.init(sizes, rng)
    batched = seed % 2 == 1
    x = rng.normal(size=(3, sizes[0]) if batched else sizes[0])
    w = rng.normal(size=(3, sizes[-1]) if batched else sizes[-1])
    _, cache = forward(net, x)
    g = backward(net, cache, w)
    num, num_x = numeric_grads(net, x.copy(), w)
    for analytic, numeric in zip(g.flat(), num):
        assert rel_err(analytic, numeric) < 1e-5
    assert rel_err(g.input, num_x) < 1e-5


def test_softmax_examples():
    probs, lp = softmax_logprob([0.0, 0.0], 0)
    assert probs == pytest.approx([0.5, 0.5]) and lp == pytest.approx(-math.log(2))
    probs, lp = softmax_logprob([1000.0, 0.0], 0)
    assert np.all(np.isfinite(probs)) and probs[0] == pytest.approx(1.0) and probs[1] < 1e-300
    probs, lp = softmax_logprob([math.log(3), 0.0], 0)
    assert probs[0] == pytest.approx(0.75) and lp == pytest.approx(math.log(0.75))


def test_softmax_normalisation_and_shift_invariance(rng):
    for _ in range(200):
        logits = rng.normal(scale=20, size=4)
        p = softmax(logits)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.allclose(softmax(logits + rng.normal() * 50), p, atol=1e-12)


@pytest.mark.parametrize("e,expected", [(0.5, 0.125), (2.0, 1.5), (-2.0, 1.5)])
def test_huber_values(e, expected):
    assert huber(e, 1.0) == pytest.approx(expected)


def test_huber_continuity_at_delta():
    for delta in (0.5, 1.0, 3.0):
        for sign in (1, -1):
            e = sign * delta
            eps = 1e-9
            assert huber(e - eps, delta) == pytest.approx(huber(e + eps, delta), abs=1e-8)
            fd_left = (huber(e - eps, delta) - huber(e - 2 * eps, delta)) / eps
            fd_right = (huber(e + 2 * eps, delta) - huber(e + eps, delta)) / eps
            assert fd_left == pytest.approx(fd_right, abs=1e-5)
            assert huber_grad(e, delta) == pytest.approx(fd_right, abs=1e-5)
    with pytest.raises(ValueError):
        huber(1.0, 0.0)


def test_adam_zero_gradient():
    p = [np.array([1.0, -2.0])]
    state = AdamState(lr=0.05)
    adam_step(p, [np.zeros(2)], state)
    assert np.array_equal(p[0], [1.0, -2.0]) and state.t == 1


def test_adam_first_step_is_signed_lr():
    p = [np.array([0.0, 0.0, 0.0])]
    adam_step(p, [np.array([3.0, -0.01, 1e3])], AdamState(lr=0.05))
    assert p[0] == pytest.approx([-0.05, 0.05, -0.05], rel=1e-6)


def test_adam_step_bound():
    p = [np.array([0.0])]
    state = AdamState(lr=0.05)
    prev = 0.0
    for _ in range(2):
        adam_step(p, [np.array([2.0])], state)
        assert abs(p[0][0] - prev) <= 0.05 + 1e-12
        prev = p[0][0]


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step([np.zeros(2)], [np.zeros(3)], AdamState(lr=0.1))


def test_adam_determinism():
    def trajectory(seed):
        rng = np.random.default_rng(seed)
        net = Mlp.init([3, 8, 2], rng)
        state = AdamState(lr=0.01)
        for _ in range(20):
            x = rng.normal(size=(5, 3))
            _, cache = forward(net, x)
            g = backward(net, cache, rng.normal(size=(5, 2)))
            adam_step(net.parameters(), g.flat(), state)
            net.version += 1
        return [p.copy() for p in net.parameters()]

    for a, b in zip(trajectory(3), trajectory(3)):
        assert np.array_equal(a, b)


def test_init_bounds(rng):
    net = Mlp.init([3, 128, 256, 2], rng)
    for layer in net.layers:
        bound = 1 / math.sqrt(layer.n_in)
        assert np.all(np.abs(layer.weights) <= bound) and np.all(np.abs(layer.biases) <= bound)
    assert [l.activation for l in net.layers] == ["relu", "relu", "identity"]
