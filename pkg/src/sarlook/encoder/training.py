"""Unsupervised training loop with seeded shuffling and checkpoint selection."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import ConvTransformerAutoencoder, EncoderConfig, ae_loss
from .optim import Adam
from .stacks import Embedding, InputStack


class TrainingDiverged(RuntimeError):
    """Raised when the reconstruction loss becomes non-finite."""


def stacks_to_batch(stacks: list[InputStack], dtype=np.float64) -> np.ndarray:
    """(N, H, W, C) channels-last batch from a list of stacks."""
    return np.stack([s.channels.transpose(1, 2, 0) for s in stacks]).astype(dtype)


def _eval_loss(model: ConvTransformerAutoencoder, x: np.ndarray, batch_size: int) -> float:
    total = 0.0
    for i in range(0, x.shape[0], batch_size):
        xb = x[i:i + batch_size]
        recon, _ = model.forward(xb, train=False)
        total += ae_loss(xb, recon) * xb.shape[0]
    return total / x.shape[0]


def train_autoencoder(
    dataset: list[InputStack],
    cfg: EncoderConfig,
    epochs: int = 100,
    batch_size: int = 16,
    lr: float = 1e-4,
    val_dataset: list[InputStack] | None = None,
    val_fraction: float = 0.1,
    metrics_path: str | Path | None = None,
    log=None,
) -> tuple[ConvTransformerAutoencoder, list[dict]]:
    """Train on ``dataset``; return the model restored to the checkpoint with
    the lowest validation reconstruction loss, plus the per-epoch history.

    When no explicit validation set is given, a seeded ``val_fraction`` split
    is carved from ``dataset`` (at least one sample when possible). With
    ``epochs=0`` the freshly initialized model is returned unchanged.
    Shuffling is driven by the config seed, so identical inputs give
    identical parameters.
    """
    if not dataset:
        raise ValueError("training dataset is empty")
    shapes = {s.shape for s in dataset}
    if len(shapes) != 1:
        raise ValueError(f"inconsistent stack dims: {sorted(shapes)}")

    model = ConvTransformerAutoencoder(cfg)
    if epochs == 0:
        return model, []

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0xBA7C4])))
    if val_dataset is None:
        n_val = min(max(int(round(len(dataset) * val_fraction)), 1), len(dataset) - 1) \
            if len(dataset) > 1 else 0
        perm = rng.permutation(len(dataset))
        val_idx = set(perm[:n_val].tolist())
        train_stacks = [dataset[i] for i in range(len(dataset)) if i not in val_idx]
        val_stacks = [dataset[i] for i in sorted(val_idx)]
    else:
        train_stacks = list(dataset)
        val_stacks = list(val_dataset)

    x_train = stacks_to_batch(train_stacks, cfg.np_dtype)
    x_val = stacks_to_batch(val_stacks, cfg.np_dtype) if val_stacks else None

    optimizer = Adam(model.parameters(), lr=lr)
    history: list[dict] = []
    best_state = model.state()
    best_val = float("inf")
    n = x_train.shape[0]
    eff_batch = min(batch_size, n)

    for epoch in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, n, eff_batch):
            idx = order[start:start + eff_batch]
            if idx.size < 2:
                continue  # batch-norm needs at least 2 samples
            model.zero_grads()
            loss = model.loss_and_grads(x_train[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {start // eff_batch}"
                )
            optimizer.step()
            epoch_loss += loss * idx.size
            seen += idx.size
        train_loss = epoch_loss / max(seen, 1)
        val_loss = _eval_loss(model, x_val, batch_size) if x_val is not None else train_loss
        record = {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss}
        history.append(record)
        if log:
            log(f"epoch {epoch}: train {train_loss:.6f}  val {val_loss:.6f}")
        if val_loss < best_val:
            best_val = val_loss
            best_state = model.state()

    model.load_state(best_state)
    if metrics_path is not None:
        with open(metrics_path, "w") as fh:
            for record in history:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return model, history


def embed_stack(model: ConvTransformerAutoencoder, s: InputStack) -> Embedding:
    """Eval-mode embedding of one stack (global average pooled latent)."""
    return embed_stacks(model, [s])[0]


def embed_stacks(
    model: ConvTransformerAutoencoder,
    stacks: list[InputStack],
    batch_size: int = 16,
) -> list[Embedding]:
    out: list[Embedding] = []
    for i in range(0, len(stacks), batch_size):
        chunk = stacks[i:i + batch_size]
        vecs = model.embed_batch(stacks_to_batch(chunk, model.cfg.np_dtype))
        for s, vec in zip(chunk, vecs):
            out.append(
                Embedding(
                    id=s.source_id,
                    vector=np.asarray(vec, dtype=np.float64),
                    representation_tag=s.representation_tag,
                    encoder_tag="AUTOENC",
                    encoder_version=model.ENCODER_VERSION,
                )
            )
    return out
