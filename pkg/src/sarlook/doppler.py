"""Per-pixel Doppler centroid estimation via the lag-1 conjugate product.

For a complex field x the estimator forms P[m, n] = x[m+1, n] * conj(x[m, n])
(an (M-1) x N grid), smooths it with a d1 x d2 mean filter and converts the
smoothed phase to Hz:

    D = -prf * angle(Z) / (2 * pi)

The sign convention is kept exactly as the estimator is defined, which maps
a +f azimuth phase ramp to a -f estimate; pass ``negate=True`` to flip it
for physical interpretation.

Border handling: the mean filter uses truncated-window normalization (each
output divides by the count of in-bounds taps), implemented with an
integral image. The window anchored at output pixel (m, n) covers rows
[m - (d1-1)//2, m + d1//2] and the analogous column span, clipped to the
grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import SubapertureSet, boxfilter_decimate
from .vignette import ComplexVignette


@dataclass(frozen=True)
class DopplerField:
    """Real Doppler centroid grid in Hz, bounded by +/- prf/2."""

    data: np.ndarray
    prf: float
    source_id: str
    subaperture_index: int | None = None
    zero_phase_count: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("Doppler field must be 2-D")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Doppler field contains non-finite values")
        half = self.prf / 2
        if arr.size and (arr.min() < -half or arr.max() > half):
            raise ValueError("Doppler values exceed +/- prf/2")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)


def mean_filter_truncated(arr: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """d1 x d2 mean filter with truncated-window normalization at borders."""
    if d1 < 1 or d2 < 1:
        raise ValueError("filter dims must be >= 1")
    rows, cols = arr.shape
    c = np.zeros((rows + 1, cols + 1), dtype=arr.dtype)
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=c[1:, 1:])
    r0 = np.clip(np.arange(rows) - (d1 - 1) // 2, 0, rows)
    r1 = np.clip(np.arange(rows) + d1 // 2 + 1, 0, rows)
    c0 = np.clip(np.arange(cols) - (d2 - 1) // 2, 0, cols)
    c1 = np.clip(np.arange(cols) + d2 // 2 + 1, 0, cols)
    total = c[r1][:, c1] - c[r0][:, c1] - c[r1][:, c0] + c[r0][:, c0]
    counts = np.outer(r1 - r0, c1 - c0)
    return total / counts


def estimate_doppler(
    x: np.ndarray,
    prf: float,
    d1: int = 32,
    d2: int = 32,
    negate: bool = False,
    source_id: str = "",
    subaperture_index: int | None = None,
) -> DopplerField:
    """Doppler centroid field of a complex grid; output has M-1 azimuth rows.

    Zero-magnitude smoothed products (possible on all-zero regions) map to
    0 Hz and are counted in ``zero_phase_count`` instead of producing NaN.
    """
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("need a 2-D grid with at least 2 azimuth rows")
    if prf <= 0:
        raise ValueError("prf must be > 0")
    pairs = x[1:, :] * np.conj(x[:-1, :])
    z = mean_filter_truncated(pairs, d1, d2)
    zero = z == 0
    n_zero = int(zero.sum())
    angles = np.angle(z)
    if n_zero:
        angles = np.where(zero, 0.0, angles)
    d = -prf * angles / (2 * np.pi)
    if negate:
        d = -d
    return DopplerField(
        data=d,
        prf=prf,
        source_id=source_id,
        subaperture_index=subaperture_index,
        zero_phase_count=n_zero,
    )


def estimate_doppler_vignette(
    v: ComplexVignette,
    d1: int = 32,
    d2: int = 32,
    negate: bool = False,
) -> DopplerField:
    return estimate_doppler(v.data, v.prf, d1, d2, negate=negate, source_id=v.id)


def doppler_on_subapertures(
    ss: SubapertureSet,
    d1: int = 32,
    d2: int = 32,
    k: int = 10,
    negate: bool = False,
) -> list[DopplerField]:
    """Decimated Doppler centroid fields, one per sub-look.

    Each sub-look is basebanded first (demodulated by its known band center)
    so the field measures the Doppler anomaly relative to the sub-band, not
    the band carrier; a zero-ramp scene therefore yields near-zero fields
    for every sub-look.
    """
    fields: list[DopplerField] = []
    for i, (slc, fc) in enumerate(zip(ss.sub_slc, ss.band_centers_hz)):
        m = np.arange(slc.shape[0], dtype=np.float64)[:, None]
        basebanded = slc * np.exp(-2j * np.pi * fc * m / ss.prf)
        full = estimate_doppler(
            basebanded, ss.prf, d1, d2,
            negate=negate, source_id=ss.source_id, subaperture_index=i,
        )
        fields.append(
            DopplerField(
                data=boxfilter_decimate(full.data, k),
                prf=ss.prf,
                source_id=ss.source_id,
                subaperture_index=i,
                zero_phase_count=full.zero_phase_count,
            )
        )
    return fields
