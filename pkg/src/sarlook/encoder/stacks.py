"""Input representations for the encoders.

Four representations of one vignette feed the retrieval experiments:

    VIG        decimated magnitude of the calibrated vignette (1 channel)
    SUBAP      decimated magnitudes of the n_sub sub-looks (n_sub channels)
    DOP_VIG    decimated Doppler centroid field of the vignette (1 channel)
    DOP_SUBAP  decimated Doppler fields of the sub-looks (n_sub channels)

Doppler grids have one azimuth row less than magnitude grids before
decimation, so every stack is center-cropped to dimensions divisible by 8
(the auto-encoder's three stride-2 stages).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..doppler import doppler_on_subapertures, estimate_doppler
from ..preprocess import (
    CalibrationProfile,
    SubapertureSet,
    boxfilter_decimate,
    calibrate_sigma0,
    subaperture_decompose,
    vignette_magnitude_decimated,
)
from ..vignette import ComplexVignette

REPRESENTATION_TAGS = ("VIG", "SUBAP", "DOP_VIG", "DOP_SUBAP")
ENCODER_TAGS = ("BASELINE", "AUTOENC")


@dataclass(frozen=True)
class InputStack:
    """C normalized channels of identical dims plus the stats used."""

    source_id: str
    channels: np.ndarray
    representation_tag: str
    normalization_stats: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        arr = np.asarray(self.channels, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError("channels must be a (C, H, W) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("stack contains non-finite values")
        if self.representation_tag not in REPRESENTATION_TAGS:
            raise ValueError(f"unknown representation tag {self.representation_tag!r}")
        if len(self.normalization_stats) != arr.shape[0]:
            raise ValueError("one (mean, std) pair required per channel")
        if any(s <= 0 for _, s in self.normalization_stats):
            raise ValueError("recorded stds must be > 0")
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.channels.shape


@dataclass(frozen=True)
class Embedding:
    """Fixed-length descriptor of one vignette with provenance."""

    id: str
    vector: np.ndarray
    representation_tag: str
    encoder_tag: str
    encoder_version: str

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=np.float64).ravel()
        if vec.size == 0 or not np.all(np.isfinite(vec)):
            raise ValueError("embedding vector must be non-empty and finite")
        if self.representation_tag not in REPRESENTATION_TAGS:
            raise ValueError(f"unknown representation tag {self.representation_tag!r}")
        if self.encoder_tag not in ENCODER_TAGS:
            raise ValueError(f"unknown encoder tag {self.encoder_tag!r}")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def dimension(self) -> int:
        return self.vector.shape[0]


def normalize_stack(
    channels: list[np.ndarray] | np.ndarray,
    source_id: str,
    representation_tag: str,
) -> InputStack:
    """Standardize each channel to zero mean / unit variance.

    Constant channels map to all-zeros with std recorded as 1.
    """
    arr = np.asarray(channels, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise ValueError("expected a nonempty (C, H, W) stack")
    out = np.empty_like(arr)
    stats = []
    for c in range(arr.shape[0]):
        mu = float(arr[c].mean())
        sd = float(arr[c].std())
        if sd == 0.0:
            out[c] = 0.0
            stats.append((mu, 1.0))
        else:
            out[c] = (arr[c] - mu) / sd
            stats.append((mu, sd))
    return InputStack(
        source_id=source_id,
        channels=out,
        representation_tag=representation_tag,
        normalization_stats=tuple(stats),
    )


def crop_to_multiple(grid: np.ndarray, multiple: int = 8) -> np.ndarray:
    """Center-crop a 2-D grid so both dims are divisible by ``multiple``."""
    r = (grid.shape[0] // multiple) * multiple
    c = (grid.shape[1] // multiple) * multiple
    if r == 0 or c == 0:
        raise ValueError(f"grid {grid.shape} too small to crop to multiples of {multiple}")
    r0 = (grid.shape[0] - r) // 2
    c0 = (grid.shape[1] - c) // 2
    return grid[r0:r0 + r, c0:c0 + c]


def build_representation_stacks(
    v: ComplexVignette,
    profile: CalibrationProfile | None = None,
    n_sub: int = 4,
    alpha: float = 0.75,
    k: int = 10,
    d1: int = 32,
    d2: int = 32,
    subapertures: SubapertureSet | None = None,
) -> dict[str, InputStack]:
    """All four normalized representations of one vignette.

    Pass a precomputed ``subapertures`` set to skip redoing the spectral
    split when several representations are built from one vignette.
    """
    ss = subapertures or subaperture_decompose(v, profile, n_sub=n_sub, alpha=alpha, k=k)
    vig = crop_to_multiple(vignette_magnitude_decimated(v, profile, k))
    subap = np.stack([crop_to_multiple(m) for m in ss.sub_mag_decimated])

    calibrated = calibrate_sigma0(v, profile or CalibrationProfile.ones(v.cols))
    dop_full = estimate_doppler(calibrated.data, v.prf, d1, d2, source_id=v.id)
    dop_vig = crop_to_multiple(boxfilter_decimate(dop_full.data, k))
    dop_fields = doppler_on_subapertures(ss, d1, d2, k)
    dop_subap = np.stack([crop_to_multiple(f.data) for f in dop_fields])

    return {
        "VIG": normalize_stack(vig[None], v.id, "VIG"),
        "SUBAP": normalize_stack(subap, v.id, "SUBAP"),
        "DOP_VIG": normalize_stack(dop_vig[None], v.id, "DOP_VIG"),
        "DOP_SUBAP": normalize_stack(dop_subap, v.id, "DOP_SUBAP"),
    }
