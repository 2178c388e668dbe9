"""Neural network layers with explicit forward/backward passes.

Everything is numpy, channels-last (batch, height, width, channels), with
convolutions evaluated as a loop over kernel offsets so the hot path is a
BLAS matmul per offset. Each layer caches what its backward pass needs;
backward computes exact reverse-mode gradients and stores them on the
layer's parameters.

Gradients are *set*, not accumulated: one backward per forward.
"""
from __future__ import annotations

import numpy as np


class Param:
    """A learnable array plus its gradient slot."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad: np.ndarray | None = None


def _uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Layer:
    """Base layer: subclasses define forward / backward / params / buffers."""

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> list[Param]:
        return []

    def buffers(self) -> dict[str, np.ndarray]:
        return {}


class Conv2d(Layer):
    """2-D convolution, weight shape (k, k, c_in, c_out), bias (c_out,)."""

    def __init__(self, name, c_in, c_out, kernel, stride, pad, rng, dtype):
        self.name = name
        self.c_in, self.c_out = c_in, c_out
        self.k, self.stride, self.pad = kernel, stride, pad
        fan_in = kernel * kernel * c_in
        self.weight = Param(f"{name}.weight", _uniform_init(rng, (kernel, kernel, c_in, c_out), fan_in, dtype))
        self.bias = Param(f"{name}.bias", np.zeros(c_out, dtype=dtype))
        self._cache = None

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        k, s, p = self.k, self.stride, self.pad
        return (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1

    def forward(self, x, train):
        b, h, w, c = x.shape
        if c != self.c_in:
            raise ValueError(f"{self.name}: expected {self.c_in} channels, got {c}")
        k, s, p = self.k, self.stride, self.pad
        oh, ow = self.out_hw(h, w)
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
        out2d = np.tile(self.bias.value, (b * oh * ow, 1))
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                sl = xp[:, u:u + s * oh:s, v:v + s * ow:s, :].reshape(-1, c)
                out2d += sl @ wv[u, v]
        self._cache = (xp, (b, h, w), (oh, ow))
        return out2d.reshape(b, oh, ow, self.c_out)

    def backward(self, dy):
        xp, (b, h, w), (oh, ow) = self._cache
        k, s, p = self.k, self.stride, self.pad
        dy2d = dy.reshape(-1, self.c_out)
        self.bias.grad = dy2d.sum(axis=0)
        dw = np.zeros_like(self.weight.value)
        dxp = np.zeros_like(xp)
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                sl = xp[:, u:u + s * oh:s, v:v + s * ow:s, :].reshape(-1, self.c_in)
                dw[u, v] = sl.T @ dy2d
                dxp[:, u:u + s * oh:s, v:v + s * ow:s, :] += (dy2d @ wv[u, v].T).reshape(b, oh, ow, self.c_in)
        self.weight.grad = dw
        self._cache = None
        return dxp[:, p:p + h, p:p + w, :] if p else dxp

    def params(self):
        return [self.weight, self.bias]


class ConvTranspose2d(Layer):
    """Transposed convolution (adjoint scatter of a strided conv)."""

    def __init__(self, name, c_in, c_out, kernel, stride, pad, out_pad, rng, dtype):
        self.name = name
        self.c_in, self.c_out = c_in, c_out
        self.k, self.stride, self.pad, self.out_pad = kernel, stride, pad, out_pad
        fan_in = kernel * kernel * c_in
        self.weight = Param(f"{name}.weight", _uniform_init(rng, (kernel, kernel, c_in, c_out), fan_in, dtype))
        self.bias = Param(f"{name}.bias", np.zeros(c_out, dtype=dtype))
        self._cache = None

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        k, s, p, op = self.k, self.stride, self.pad, self.out_pad
        return (h - 1) * s - 2 * p + k + op, (w - 1) * s - 2 * p + k + op

    def forward(self, x, train):
        b, h, w, c = x.shape
        if c != self.c_in:
            raise ValueError(f"{self.name}: expected {self.c_in} channels, got {c}")
        k, s, p = self.k, self.stride, self.pad
        oh, ow = self.out_hw(h, w)
        canvas = np.zeros((b, oh + 2 * p, ow + 2 * p, self.c_out), dtype=x.dtype)
        x2d = x.reshape(-1, c)
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                canvas[:, u:u + s * h:s, v:v + s * w:s, :] += (x2d @ wv[u, v]).reshape(b, h, w, self.c_out)
        out = canvas[:, p:p + oh, p:p + ow, :] + self.bias.value
        self._cache = (x2d, (b, h, w), (oh, ow))
        return out

    def backward(self, dy):
        x2d, (b, h, w), (oh, ow) = self._cache
        k, s, p = self.k, self.stride, self.pad
        self.bias.grad = dy.sum(axis=(0, 1, 2))
        dyp = np.pad(dy, ((0, 0), (p, p), (p, p), (0, 0))) if p else dy
        dw = np.zeros_like(self.weight.value)
        dx2d = np.zeros_like(x2d)
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                duv = dyp[:, u:u + s * h:s, v:v + s * w:s, :].reshape(-1, self.c_out)
                dw[u, v] = x2d.T @ duv
                dx2d += duv @ wv[u, v].T
        self.weight.grad = dw
        self._cache = None
        return dx2d.reshape(b, h, w, self.c_in)

    def params(self):
        return [self.weight, self.bias]


class DepthwiseConv2d(Layer):
    """Per-channel k x k convolution, stride 1; weight (k, k, c), no bias."""

    def __init__(self, name, channels, kernel, pad, rng, dtype):
        self.name = name
        self.c = channels
        self.k, self.pad = kernel, pad
        self.weight = Param(f"{name}.weight", _uniform_init(rng, (kernel, kernel, channels), kernel * kernel, dtype))
        self._cache = None

    def forward(self, x, train):
        b, h, w, c = x.shape
        k, p = self.k, self.pad
        oh, ow = h + 2 * p - k + 1, w + 2 * p - k + 1
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
        out = np.zeros((b, oh, ow, c), dtype=x.dtype)
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                out += xp[:, u:u + oh, v:v + ow, :] * wv[u, v]
        self._cache = (xp, (b, h, w), (oh, ow))
        return out

    def backward(self, dy):
        xp, (b, h, w), (oh, ow) = self._cache
        k, p = self.k, self.pad
        dw = np.zeros_like(self.weight.value)
        dxp = np.zeros_like(xp)
        wv = self.weight.value
        for u in range(k):
            for v in range(k):
                dw[u, v] = (xp[:, u:u + oh, v:v + ow, :] * dy).sum(axis=(0, 1, 2))
                dxp[:, u:u + oh, v:v + ow, :] += dy * wv[u, v]
        self.weight.grad = dw
        self._cache = None
        return dxp[:, p:p + h, p:p + w, :] if p else dxp

    def params(self):
        return [self.weight]


class BatchNorm2d(Layer):
    """Batch normalization over (batch, height, width) per channel."""

    def __init__(self, name, channels, dtype, momentum=0.1, eps=1e-5):
        self.name = name
        self.c = channels
        self.momentum = momentum
        self.eps = eps
        self.gamma = Param(f"{name}.gamma", np.ones(channels, dtype=dtype))
        self.beta = Param(f"{name}.beta", np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def forward(self, x, train):
        if train:
            n = x.shape[0] * x.shape[1] * x.shape[2]
            if n < 2:
                raise ValueError(f"{self.name}: batch statistics need >= 2 samples per channel")
            mu = x.mean(axis=(0, 1, 2))
            var = x.var(axis=(0, 1, 2))
            inv_std = 1.0 / np.sqrt(var + self.eps)
            xhat = (x - mu) * inv_std
            mom = self.momentum
            self.running_mean = (1 - mom) * self.running_mean + mom * mu
            self.running_var = (1 - mom) * self.running_var + mom * var * n / (n - 1)
            self._cache = (xhat, inv_std, n)
        else:
            inv_std = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = (x - self.running_mean) * inv_std
            self._cache = None
        return self.gamma.value * xhat + self.beta.value

    def backward(self, dy):
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward requires a train-mode forward")
        xhat, inv_std, n = self._cache
        self.beta.grad = dy.sum(axis=(0, 1, 2))
        self.gamma.grad = (dy * xhat).sum(axis=(0, 1, 2))
        g = self.gamma.value * inv_std
        dx = g * (dy - dy.mean(axis=(0, 1, 2)) - xhat * (dy * xhat).mean(axis=(0, 1, 2)))
        self._cache = None
        return dx

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return {
            f"{self.name}.running_mean": self.running_mean,
            f"{self.name}.running_var": self.running_var,
        }

    def load_buffers(self, bufs: dict[str, np.ndarray]) -> None:
        self.running_mean = bufs[f"{self.name}.running_mean"].copy()
        self.running_var = bufs[f"{self.name}.running_var"].copy()


class ReLU(Layer):
    def forward(self, x, train):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        dx = np.where(self._mask, dy, 0.0)
        self._mask = None
        return dx


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def forward(self, x, train):
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def buffers(self):
        out = {}
        for layer in self.layers:
            out.update(layer.buffers())
        return out


class DepthwiseSeparable(Layer):
    """Depthwise k x k followed by a pointwise 1 x 1 projection."""

    def __init__(self, name, channels, kernel, rng, dtype):
        self.depthwise = DepthwiseConv2d(f"{name}.depthwise", channels, kernel, kernel // 2, rng, dtype)
        self.pointwise = Conv2d(f"{name}.pointwise", channels, channels, 1, 1, 0, rng, dtype)

    def forward(self, x, train):
        return self.pointwise.forward(self.depthwise.forward(x, train), train)

    def backward(self, dy):
        return self.depthwise.backward(self.pointwise.backward(dy))

    def params(self):
        return self.depthwise.params() + self.pointwise.params()


def softmax_last(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


class TransformerBlock(Layer):
    """Convolutional transformer: depthwise-separable Q/K/V projections over
    overlapping spatial tokens, multi-head self-attention, batch-norm, a
    pointwise convolution, and an optional residual from the block input."""

    def __init__(self, name, channels, heads, token_kernel, residual, rng, dtype):
        if channels % heads:
            raise ValueError(f"channels ({channels}) must divide evenly into {heads} heads")
        self.name = name
        self.c = channels
        self.heads = heads
        self.residual = residual
        self.q_proj = DepthwiseSeparable(f"{name}.q_proj", channels, token_kernel, rng, dtype)
        self.k_proj = DepthwiseSeparable(f"{name}.k_proj", channels, token_kernel, rng, dtype)
        self.v_proj = DepthwiseSeparable(f"{name}.v_proj", channels, token_kernel, rng, dtype)
        self.norm = BatchNorm2d(f"{name}.norm", channels, dtype)
        self.pointwise = Conv2d(f"{name}.pointwise", channels, channels, 1, 1, 0, rng, dtype)
        self._cache = None

    def _split_heads(self, x, b, t):
        # (B, H, W, C) -> (B, heads, T, dh)
        return x.reshape(b, t, self.heads, self.c // self.heads).transpose(0, 2, 1, 3)

    def _merge_heads(self, x, b, h, w):
        return x.transpose(0, 2, 1, 3).reshape(b, h, w, self.c)

    def forward(self, x, train):
        b, h, w, _ = x.shape
        t = h * w
        dh = self.c // self.heads
        q = self._split_heads(self.q_proj.forward(x, train), b, t)
        k = self._split_heads(self.k_proj.forward(x, train), b, t)
        v = self._split_heads(self.v_proj.forward(x, train), b, t)
        scores = q @ k.swapaxes(-1, -2) / np.sqrt(dh)
        attn = softmax_last(scores)
        ctx = self._merge_heads(attn @ v, b, h, w)
        out = self.pointwise.forward(self.norm.forward(ctx, train), train)
        if self.residual:
            out = out + x
        self._cache = (q, k, v, attn, (b, h, w))
        return out

    def backward(self, dy):
        q, k, v, attn, (b, h, w) = self._cache
        t = h * w
        dh = self.c // self.heads
        dctx = self.norm.backward(self.pointwise.backward(dy))
        dctx = self._split_heads(dctx, b, t)
        dattn = dctx @ v.swapaxes(-1, -2)
        dv = attn.swapaxes(-1, -2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dq = dscores @ k / np.sqrt(dh)
        dk = dscores.swapaxes(-1, -2) @ q / np.sqrt(dh)
        dx = self.q_proj.backward(self._merge_heads(dq, b, h, w))
        dx += self.k_proj.backward(self._merge_heads(dk, b, h, w))
        dx += self.v_proj.backward(self._merge_heads(dv, b, h, w))
        if self.residual:
            dx += dy
        self._cache = None
        return dx

    def params(self):
        return (
            self.q_proj.params() + self.k_proj.params() + self.v_proj.params()
            + self.norm.params() + self.pointwise.params()
        )

    def buffers(self):
        return self.norm.buffers()
