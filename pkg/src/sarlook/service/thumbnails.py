"""Deterministic 8-bit PNG rendering of decimated grids.

Magnitudes render as grayscale with a per-image 2-98 percentile stretch;
Doppler fields use a blue-white-red diverging map over a symmetric range
(+/- max(|p2|, |p98|)) so that 0 Hz stays white. Same input bytes in, same
PNG bytes out; the cache key includes STRETCH_VERSION.
"""
from __future__ import annotations

import io

import numpy as np
from PIL import Image

STRETCH_VERSION = "s1"


def _percentiles(grid: np.ndarray, lo: float = 2.0, hi: float = 98.0) -> tuple[float, float]:
    return float(np.percentile(grid, lo)), float(np.percentile(grid, hi))


def magnitude_to_gray(grid: np.ndarray) -> np.ndarray:
    p2, p98 = _percentiles(grid)
    if p98 <= p2:
        return np.zeros(grid.shape, dtype=np.uint8)
    scaled = np.clip((grid - p2) / (p98 - p2), 0.0, 1.0)
    return np.round(scaled * 255).astype(np.uint8)


def doppler_to_rgb(grid: np.ndarray) -> np.ndarray:
    p2, p98 = _percentiles(grid)
    a = max(abs(p2), abs(p98))
    if a == 0.0:
        a = 1.0
    t = np.clip(grid / a, -1.0, 1.0)  # -1 blue, 0 white, +1 red
    rgb = np.empty((*grid.shape, 3), dtype=np.uint8)
    up = np.clip(1.0 - np.abs(t), 0.0, 1.0)
    rgb[..., 0] = np.round(255 * np.where(t >= 0, 1.0, up))
    rgb[..., 1] = np.round(255 * up)
    rgb[..., 2] = np.round(255 * np.where(t <= 0, 1.0, up))
    return rgb


def render_thumbnail_png(grids: np.ndarray, rep: str, upscale: int = 3) -> bytes:
    """PNG bytes for one representation's stored channel grids (C, H, W)."""
    grids = np.atleast_3d(grids)
    combined = grids.mean(axis=0)
    if rep.startswith("DOP"):
        arr = doppler_to_rgb(combined)
        img = Image.fromarray(arr, mode="RGB")
    else:
        img = Image.fromarray(magnitude_to_gray(combined), mode="L")
    if upscale > 1:
        img = img.resize((img.width * upscale, img.height * upscale), Image.NEAREST)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()
