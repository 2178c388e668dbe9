"""Deterministic non-learned reference descriptor.

Per channel, three blocks of texture statistics are concatenated:

  * 8 intensity histogram bins over [-3, 3] (the stack is already
    standardized), as mass fractions;
  * 16 radially averaged 2-D power-spectrum bins, log1p of the mean
    energy per annulus;
  * 8 azimuth-marginal autocorrelation coefficients at lags 1..8.

32 features per channel, fully deterministic.
"""
from __future__ import annotations

import numpy as np

from .stacks import Embedding, InputStack

BASELINE_VERSION = "baseline-1"

N_HIST = 8
N_SPECTRUM = 16
N_ACF = 8


def _histogram_block(ch: np.ndarray) -> np.ndarray:
    counts, _ = np.histogram(ch, bins=N_HIST, range=(-3.0, 3.0))
    return counts.astype(np.float64) / ch.size


def _radial_spectrum_block(ch: np.ndarray) -> np.ndarray:
    power = np.abs(np.fft.fftshift(np.fft.fft2(ch))) ** 2 / ch.size
    h, w = ch.shape
    yy = np.arange(h) - h // 2
    xx = np.arange(w) - w // 2
    r = np.hypot(yy[:, None], xx[None, :])
    r_max = r.max() or 1.0
    bins = np.clip((r / r_max * N_SPECTRUM).astype(np.intp), 0, N_SPECTRUM - 1)
    sums = np.bincount(bins.ravel(), weights=power.ravel(), minlength=N_SPECTRUM)
    counts = np.bincount(bins.ravel(), minlength=N_SPECTRUM)
    mean_energy = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return np.log1p(mean_energy)


def _azimuth_acf_block(ch: np.ndarray) -> np.ndarray:
    g = ch.mean(axis=1)
    g = g - g.mean()
    denom = float(g @ g)
    out = np.zeros(N_ACF)
    if denom > 0:
        for lag in range(1, N_ACF + 1):
            if lag < g.size:
                out[lag - 1] = float(g[:-lag] @ g[lag:]) / denom
    return out


def baseline_descriptor(s: InputStack, encoder_version: str = BASELINE_VERSION) -> Embedding:
    """32*C-dimensional deterministic descriptor of a normalized stack."""
    c, h, w = s.shape
    if h < 16 or w < 16:
        raise ValueError(f"stack dims {h}x{w} too small for the baseline descriptor")
    parts = []
    for i in range(c):
        ch = s.channels[i]
        parts.append(_histogram_block(ch))
        parts.append(_radial_spectrum_block(ch))
        parts.append(_azimuth_acf_block(ch))
    return Embedding(
        id=s.source_id,
        vector=np.concatenate(parts),
        representation_tag=s.representation_tag,
        encoder_tag="BASELINE",
        encoder_version=encoder_version,
    )
