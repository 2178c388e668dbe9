"""Versioned binary container for auto-encoder parameters.

Layout (little-endian):

    magic    4 bytes  b"SAEC"
    version  u16      currently 1
    manifest_len u32
    manifest     UTF-8 JSON: config, encoder version, and an ordered array
                 table [{path, kind, shape, dtype, offset, nbytes}]
    blob         concatenated raw little-endian f64 arrays

Arrays are always stored as f64 regardless of the in-memory dtype.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import ConvTransformerAutoencoder, EncoderConfig

CHECKPOINT_MAGIC = b"SAEC"
CHECKPOINT_VERSION = 1
_HEAD = struct.Struct("<4sHI")


def save_checkpoint(model: ConvTransformerAutoencoder, path: str | Path) -> None:
    state = model.state()
    table = []
    chunks = []
    offset = 0
    for kind in ("params", "buffers"):
        for name, arr in state[kind].items():
            raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
            table.append({
                "path": name,
                "kind": kind,
                "shape": list(arr.shape),
                "dtype": "<f8",
                "offset": offset,
                "nbytes": len(raw),
            })
            chunks.append(raw)
            offset += len(raw)
    manifest = json.dumps({
        "config": model.cfg.to_dict(),
        "encoder_version": model.ENCODER_VERSION,
        "arrays": table,
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(manifest)))
        fh.write(manifest)
        for raw in chunks:
            fh.write(raw)


def load_checkpoint(path: str | Path) -> ConvTransformerAutoencoder:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise ValueError(f"{path}: not a checkpoint file")
    magic, version, manifest_len = _HEAD.unpack_from(raw)
    if magic != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    manifest = json.loads(raw[_HEAD.size:_HEAD.size + manifest_len])
    blob = raw[_HEAD.size + manifest_len:]
    state: dict = {"params": {}, "buffers": {}}
    for entry in manifest["arrays"]:
        start, n = entry["offset"], entry["nbytes"]
        if start + n > len(blob):
            raise ValueError(f"{path}: truncated checkpoint blob at {entry['path']}")
        arr = np.frombuffer(blob[start:start + n], dtype=entry["dtype"]).reshape(entry["shape"])
        state[entry["kind"]][entry["path"]] = arr.astype(np.float64)
    model = ConvTransformerAutoencoder(EncoderConfig.from_dict(manifest["config"]))
    model.load_state(state)
    return model
