"""Convolutional-transformer auto-encoder.

Architecture: a downsampling stack (7x7 stem convolution, then three 3x3
stride-2 convolutions, each followed by batch-norm and ReLU), a
convolutional transformer block, and an upsampling stack that mirrors the
downsampling (three 3x3 stride-2 transposed convolutions with batch-norm
and ReLU, then a 7x7 convolution back to the input channels with no
activation). The descriptive embedding is the tensor immediately after the
transformer block, reduced to a vector by global average pooling.

The external array layout is channels-first (C, H, W) to match the rest of
the package; internally everything runs channels-last.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    Param,
    ReLU,
    Sequential,
    TransformerBlock,
)

PAPER_WIDTHS = (32, 32, 64, 128)
DESK_WIDTHS = (8, 8, 16, 32)


@dataclass(frozen=True)
class EncoderConfig:
    input_channels: int
    input_height: int
    input_width: int
    widths: tuple[int, int, int, int] = DESK_WIDTHS
    attention_heads: int = 4
    token_kernel: int = 3
    latent_pool: str = "global_average"
    residual: bool = True
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self) -> None:
        if len(self.widths) != 4 or any(w <= 0 for w in self.widths):
            raise ValueError("widths must be 4 positive channel counts")
        if self.input_height % 8 or self.input_width % 8:
            raise ValueError("input dims must be divisible by 8 (three stride-2 stages)")
        if self.widths[3] % self.attention_heads:
            raise ValueError("widths[3] must be divisible by attention_heads")
        if self.latent_pool not in ("global_average", "flatten"):
            raise ValueError(f"unknown latent_pool {self.latent_pool!r}")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    @property
    def latent_hw(self) -> tuple[int, int]:
        return self.input_height // 8, self.input_width // 8

    @property
    def embedding_dim(self) -> int:
        if self.latent_pool == "flatten":
            h, w = self.latent_hw
            return self.widths[3] * h * w
        return self.widths[3]

    def to_dict(self) -> dict:
        return {
            "input_channels": self.input_channels,
            "input_height": self.input_height,
            "input_width": self.input_width,
            "widths": list(self.widths),
            "attention_heads": self.attention_heads,
            "token_kernel": self.token_kernel,
            "latent_pool": self.latent_pool,
            "residual": self.residual,
            "seed": self.seed,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        return cls(**d)


@dataclass
class TrainHistory:
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")


class ConvTransformerAutoencoder:
    """Auto-encoder with an embedding tap after the transformer block.

    Layer parameters are created in a fixed order from a PCG64 generator
    seeded with the config seed, so construction is fully deterministic.
    """

    ENCODER_VERSION = "cytran-desk-1"

    def __init__(self, cfg: EncoderConfig):
        self.cfg = cfg
        dtype = cfg.np_dtype
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
        w0, w1, w2, w3 = cfg.widths
        c = cfg.input_channels
        self.down = Sequential([
            Conv2d("down.stem", c, w0, 7, 1, 3, rng, dtype),
            BatchNorm2d("down.bn0", w0, dtype),
            ReLU(),
            Conv2d("down.conv1", w0, w1, 3, 2, 1, rng, dtype),
            BatchNorm2d("down.bn1", w1, dtype),
            ReLU(),
            Conv2d("down.conv2", w1, w2, 3, 2, 1, rng, dtype),
            BatchNorm2d("down.bn2", w2, dtype),
            ReLU(),
            Conv2d("down.conv3", w2, w3, 3, 2, 1, rng, dtype),
            BatchNorm2d("down.bn3", w3, dtype),
            ReLU(),
        ])
        self.transformer = TransformerBlock(
            "transformer", w3, cfg.attention_heads, cfg.token_kernel, cfg.residual, rng, dtype,
        )
        self.up = Sequential([
            ConvTranspose2d("up.tconv0", w3, w2, 3, 2, 1, 1, rng, dtype),
            BatchNorm2d("up.bn0", w2, dtype),
            ReLU(),
            ConvTranspose2d("up.tconv1", w2, w1, 3, 2, 1, 1, rng, dtype),
            BatchNorm2d("up.bn1", w1, dtype),
            ReLU(),
            ConvTranspose2d("up.tconv2", w1, w0, 3, 2, 1, 1, rng, dtype),
            BatchNorm2d("up.bn2", w0, dtype),
            ReLU(),
            Conv2d("up.out", w0, c, 7, 1, 3, rng, dtype),
        ])
        self._blocks = [self.down, self.transformer, self.up]

    # -- parameter access -------------------------------------------------

    def parameters(self) -> "OrderedDict[str, Param]":
        out: OrderedDict[str, Param] = OrderedDict()
        for block in self._blocks:
            for p in block.params():
                out[p.name] = p
        return out

    def buffers(self) -> "OrderedDict[str, np.ndarray]":
        out: OrderedDict[str, np.ndarray] = OrderedDict()
        for block in self._blocks:
            out.update(block.buffers())
        return out

    def state(self) -> dict:
        """Deep-copied parameter and buffer arrays, keyed by layer path."""
        return {
            "params": {k: p.value.copy() for k, p in self.parameters().items()},
            "buffers": {k: b.copy() for k, b in self.buffers().items()},
        }

    def load_state(self, state: dict) -> None:
        params = self.parameters()
        for k, v in state["params"].items():
            if k not in params:
                raise KeyError(f"unknown parameter {k}")
            if params[k].value.shape != v.shape:
                raise ValueError(f"shape mismatch for {k}: {params[k].value.shape} vs {v.shape}")
            params[k].value = v.astype(self.cfg.np_dtype).copy()
        bufs = {k: np.asarray(v) for k, v in state["buffers"].items()}
        for block in self._iter_bn():
            block.load_buffers({k: v.astype(self.cfg.np_dtype) for k, v in bufs.items() if k.startswith(block.name)})

    def _iter_bn(self):
        for block in self._blocks:
            layers = block.layers if isinstance(block, Sequential) else [block]
            for layer in layers:
                if isinstance(layer, BatchNorm2d):
                    yield layer
                elif isinstance(layer, TransformerBlock):
                    yield layer.norm

    # -- forward / backward ------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        cfg = self.cfg
        x = np.asarray(x, dtype=cfg.np_dtype)
        if x.ndim != 4 or x.shape[1:] != (cfg.input_height, cfg.input_width, cfg.input_channels):
            raise ValueError(
                f"expected batch of shape (B, {cfg.input_height}, {cfg.input_width}, "
                f"{cfg.input_channels}) channels-last, got {x.shape}"
            )
        return x

    def forward(self, x: np.ndarray, train: bool) -> tuple[np.ndarray, np.ndarray]:
        """Returns (reconstruction, latent); latent is the transformer output."""
        x = self._check_input(x)
        if train and x.shape[0] < 2:
            raise ValueError("train-mode forward needs batch >= 2 for batch-norm")
        down = self.down.forward(x, train)
        latent = self.transformer.forward(down, train)
        recon = self.up.forward(latent, train)
        return recon, latent

    def backward(self, drecon: np.ndarray) -> np.ndarray:
        dlatent = self.up.backward(drecon)
        ddown = self.transformer.backward(dlatent)
        return self.down.backward(ddown)

    def zero_grads(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def loss_and_grads(self, x: np.ndarray) -> float:
        """Train-mode reconstruction loss; leaves gradients on every Param."""
        recon, _ = self.forward(x, train=True)
        loss = ae_loss(x, recon)
        self.backward(ae_loss_grad(x, recon))
        return loss

    def embed_batch(self, x: np.ndarray) -> np.ndarray:
        """Eval-mode embeddings, (B, embedding_dim); pure in the parameters."""
        _, latent = self.forward(x, train=False)
        if self.cfg.latent_pool == "flatten":
            return latent.reshape(latent.shape[0], -1)
        return latent.mean(axis=(1, 2))


def ae_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean squared error over all elements."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    diff = x_hat - x
    return float(np.mean(diff * diff))


def ae_loss_grad(x: np.ndarray, x_hat: np.ndarray) -> np.ndarray:
    """d(ae_loss)/d(x_hat) = 2 (x_hat - x) / numel."""
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    return 2.0 * (x_hat - x) / x.size
