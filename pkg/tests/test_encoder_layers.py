"""Finite-difference gradient checks for every layer type."""
import numpy as np
import pytest

from sarlook.encoder.layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    DepthwiseConv2d,
    DepthwiseSeparable,
    ReLU,
    TransformerBlock,
    softmax_last,
)

H = 1e-5
# floor for the relative-error denominator: some gradients are structurally
# zero (e.g. a bias feeding a batch-norm), where only FD noise remains
SCALE_FLOOR = 1e-6


def layer_loss(layer, x, target):
    y = layer.forward(x, train=True)
    return 0.5 * float(np.mean((y - target) ** 2))


def _fd_grad(loss_fn, arr, h):
    fd = np.zeros_like(arr)
    flat, fd_flat = arr.reshape(-1), fd.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        lp = loss_fn()
        flat[i] = orig - h
        lm = loss_fn()
        flat[i] = orig
        fd_flat[i] = (lp - lm) / (2 * h)
    return fd


def check_layer_grads(layer, x, rel_tol=1e-5, h=H):
    """Analytic grads vs central differences for params and the input."""
    rng = np.random.default_rng(99)
    y = layer.forward(x, train=True)
    target = rng.standard_normal(y.shape)

    y = layer.forward(x, train=True)
    dx = layer.backward((y - target) / y.size)

    def loss_fn():
        return layer_loss(layer, x, target)

    fd = _fd_grad(loss_fn, x, h)
    scale = max(np.abs(fd).max(), np.abs(dx).max(), SCALE_FLOOR)
    assert np.abs(dx - fd).max() / scale < rel_tol, "input gradient mismatch"

    for p in layer.params():
        analytic = p.grad.copy()
        fd = _fd_grad(loss_fn, p.value, h)
        scale = max(np.abs(fd).max(), np.abs(analytic).max(), SCALE_FLOOR)
        assert np.abs(analytic - fd).max() / scale < rel_tol, f"{p.name} gradient mismatch"


@pytest.fixture
def grad_rng():
    return np.random.default_rng(7)


def test_conv2d_stride1(grad_rng):
    layer = Conv2d("c", 2, 3, 3, 1, 1, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 5, 6, 2)))


def test_conv2d_stride2(grad_rng):
    layer = Conv2d("c", 2, 3, 3, 2, 1, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 6, 8, 2)))


def test_conv2d_7x7(grad_rng):
    layer = Conv2d("c", 1, 2, 7, 1, 3, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((1, 8, 8, 1)))


def test_conv_transpose(grad_rng):
    layer = ConvTranspose2d("t", 3, 2, 3, 2, 1, 1, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 4, 5, 3)))


def test_conv_transpose_doubles_dims(grad_rng):
    layer = ConvTranspose2d("t", 3, 2, 3, 2, 1, 1, grad_rng, np.float64)
    out = layer.forward(grad_rng.standard_normal((2, 4, 5, 3)), train=True)
    assert out.shape == (2, 8, 10, 2)


def test_depthwise(grad_rng):
    layer = DepthwiseConv2d("d", 3, 3, 1, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 5, 5, 3)))


def test_depthwise_separable(grad_rng):
    layer = DepthwiseSeparable("ds", 4, 3, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 4, 4, 4)))


def test_batchnorm(grad_rng):
    layer = BatchNorm2d("bn", 3, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((3, 4, 4, 3)), rel_tol=1e-5)


def test_batchnorm_eval_uses_running_stats(grad_rng):
    layer = BatchNorm2d("bn", 2, np.float64)
    x = grad_rng.standard_normal((4, 3, 3, 2)) * 3 + 1
    layer.forward(x, train=True)
    y1 = layer.forward(x, train=False)
    y2 = layer.forward(x, train=False)
    assert np.array_equal(y1, y2)
    assert np.all(layer.running_var > 0)


def test_relu(grad_rng):
    layer = ReLU()
    x = grad_rng.standard_normal((2, 4, 4, 3)) + 0.05  # keep away from the kink
    check_layer_grads(layer, x)


def test_transformer_block(grad_rng):
    layer = TransformerBlock("tr", 4, 2, 3, True, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 3, 3, 4)), rel_tol=1e-5)


def test_transformer_block_no_residual(grad_rng):
    layer = TransformerBlock("tr", 4, 4, 3, False, grad_rng, np.float64)
    check_layer_grads(layer, grad_rng.standard_normal((2, 3, 3, 4)), rel_tol=1e-5)


def test_softmax_rows_sum_to_one(grad_rng):
    s = softmax_last(grad_rng.standard_normal((2, 3, 5, 5)))
    assert np.allclose(s.sum(axis=-1), 1.0)
    assert np.all(s >= 0)
