"""Subaperture decomposition pipeline.

Stages, in order: sigma-nought calibration, azimuth DFT, Hamming window
compensation, shifted-window subaperture generation, azimuth inverse DFT,
magnitude detection and 10x10 box-filter decimation.

Conventions fixed here and relied on elsewhere:

* azimuth is the row axis; the DFT runs down columns, unnormalized forward,
  1/M on the inverse (numpy convention);
* spectrum bin k maps to frequency ((k + M/2) mod M - M/2) * prf / M Hz
  (numpy ``fftfreq`` order);
* the compensation window, in centered-bin coordinates k', is
  w[k'] = alpha + (1 - alpha) * cos(2*pi*k'/M): peak 1 at zero Doppler,
  minimum 2*alpha - 1 at the band edges;
* sub-bands are adjacent, non-overlapping, each tapered by the same
  length-L Hamming prototype, ordered by increasing center frequency.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .vignette import ComplexVignette, VignetteMeta


@dataclass(frozen=True)
class CalibrationProfile:
    """Per-range-column sigma0 gain factors (a power quantity)."""

    gain: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gain, dtype=np.float64)
        if g.ndim != 1:
            raise ValueError("calibration profile must be 1-D")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ValueError("calibration gains must be finite and > 0")
        g.setflags(write=False)
        object.__setattr__(self, "gain", g)

    def __len__(self) -> int:
        return self.gain.shape[0]

    @classmethod
    def ones(cls, n: int) -> "CalibrationProfile":
        return cls(np.ones(n))

    @classmethod
    def from_file(cls, path: str | Path) -> "CalibrationProfile":
        """Load an externally supplied profile: JSON ``{"gain": [...]}``."""
        d = json.loads(Path(path).read_text())
        return cls(np.asarray(d["gain"], dtype=np.float64))


@dataclass(frozen=True)
class AzimuthSpectrum:
    """Column-wise azimuth spectrum of a vignette, numpy fft bin order."""

    data: np.ndarray
    prf: float
    source_id: str
    azimuth_spacing: float
    range_spacing: float
    meta: VignetteMeta = field(default_factory=VignetteMeta)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 2:
            raise ValueError("spectrum must be 2-D")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("spectrum contains non-finite samples")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n_bins(self) -> int:
        return self.data.shape[0]

    def frequencies_hz(self) -> np.ndarray:
        """Frequency of each bin, fft order."""
        return np.fft.fftfreq(self.n_bins, d=1.0 / self.prf)

    def with_data(self, data: np.ndarray) -> "AzimuthSpectrum":
        return AzimuthSpectrum(
            data=data,
            prf=self.prf,
            source_id=self.source_id,
            azimuth_spacing=self.azimuth_spacing,
            range_spacing=self.range_spacing,
            meta=self.meta,
        )


@dataclass(frozen=True)
class SubapertureSet:
    """Co-registered complex sub-looks of one vignette plus decimated magnitudes."""

    source_id: str
    n_sub: int
    sub_slc: list[np.ndarray]
    sub_mag_decimated: list[np.ndarray]
    band_centers_hz: list[float]
    prf: float
    azimuth_spacing: float
    range_spacing: float
    meta: VignetteMeta = field(default_factory=VignetteMeta)

    def __post_init__(self) -> None:
        if self.n_sub < 2:
            raise ValueError("a SubapertureSet needs n_sub >= 2")
        if len(self.sub_slc) != self.n_sub or len(self.sub_mag_decimated) != self.n_sub:
            raise ValueError("sub-look list lengths must equal n_sub")
        shapes = {a.shape for a in self.sub_slc}
        if len(shapes) != 1:
            raise ValueError("all sub-look SLCs must share dimensions")
        mag_shapes = {a.shape for a in self.sub_mag_decimated}
        if len(mag_shapes) != 1:
            raise ValueError("all decimated magnitudes must share dimensions")
        centers = np.asarray(self.band_centers_hz)
        if len(centers) != self.n_sub or np.any(np.diff(centers) <= 0):
            raise ValueError("band centers must be strictly increasing, one per sub-look")


def calibrate_sigma0(
    v: ComplexVignette,
    profile: CalibrationProfile,
    mode: str = "power",
) -> ComplexVignette:
    """Divide out a per-range-column reference gain.

    The profile scales sigma0, a power quantity, so the default mode divides
    the complex amplitude by sqrt(gain); ``mode="amplitude"`` divides by the
    gain directly.
    """
    if len(profile) != v.cols:
        raise ValueError(f"profile length {len(profile)} != range columns {v.cols}")
    if mode == "power":
        divisor = np.sqrt(profile.gain)
    elif mode == "amplitude":
        divisor = profile.gain
    else:
        raise ValueError(f"unknown calibration mode {mode!r}")
    return v.with_data(v.data / divisor[None, :])


def azimuth_dft(v: ComplexVignette) -> AzimuthSpectrum:
    """Unnormalized forward DFT along azimuth, length M per range column."""
    return AzimuthSpectrum(
        data=np.fft.fft(v.data, axis=0),
        prf=v.prf,
        source_id=v.id,
        azimuth_spacing=v.azimuth_spacing,
        range_spacing=v.range_spacing,
        meta=v.meta,
    )


def azimuth_idft(s: AzimuthSpectrum) -> ComplexVignette:
    """Inverse of :func:`azimuth_dft` (1/M normalization)."""
    return ComplexVignette(
        id=s.source_id,
        data=np.fft.ifft(s.data, axis=0),
        prf=s.prf,
        azimuth_spacing=s.azimuth_spacing,
        range_spacing=s.range_spacing,
        meta=s.meta,
    )


def hamming_window(m: int, alpha: float = 0.75) -> np.ndarray:
    """Full-band compensation window in fft bin order; peak 1 at DC."""
    k_centered = np.fft.fftfreq(m) * m
    return alpha + (1.0 - alpha) * np.cos(2 * np.pi * k_centered / m)


def _check_alpha(alpha: float) -> None:
    if not 0.5 <= alpha < 1.0:
        raise ValueError(f"Hamming coefficient must be in [0.5, 1), got {alpha}")


def hamming_compensate(s: AzimuthSpectrum, alpha: float = 0.75) -> AzimuthSpectrum:
    """Divide the spectrum by the azimuth Hamming weighting to flatten it."""
    _check_alpha(alpha)
    w = hamming_window(s.n_bins, alpha)
    if np.any(w <= 0):
        raise ValueError("compensation window reaches zero (alpha=0.5 with even M)")
    return s.with_data(s.data / w[:, None])


def apply_hamming_window(s: AzimuthSpectrum, alpha: float = 0.75) -> AzimuthSpectrum:
    """Multiply by the azimuth Hamming weighting (inverse of compensation)."""
    _check_alpha(alpha)
    w = hamming_window(s.n_bins, alpha)
    return s.with_data(s.data * w[:, None])


def _band_prototype(width: int, alpha: float) -> np.ndarray:
    """Hamming taper over one sub-band support, peak at the band center."""
    j = np.arange(width, dtype=np.float64)
    return alpha + (1.0 - alpha) * np.cos(2 * np.pi * (j - (width - 1) / 2.0) / width)


def make_subapertures(
    s: AzimuthSpectrum,
    n_sub: int = 4,
    alpha: float = 0.75,
    overlap: float = 0.0,
) -> tuple[list[AzimuthSpectrum], list[float]]:
    """Split the azimuth spectrum into n_sub shifted-Hamming sub-bands.

    Bands are adjacent and non-overlapping (an ``overlap`` fraction > 0 widens
    each support symmetrically for experimentation), cover the full bandwidth
    and are returned ordered by increasing center frequency. When M is not
    divisible by n_sub the spectrum is first truncated symmetrically around
    DC to the largest divisible length, so all sub-looks stay co-registered.
    n_sub=1 is permitted as the degenerate full-band window.
    """
    _check_alpha(alpha)
    m = s.n_bins
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    if n_sub > m // 4:
        raise ValueError(f"n_sub={n_sub} too large for M={m} (need >= 4 bins per band)")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap fraction must be in [0, 1)")

    length = n_sub * (m // n_sub)
    centered = np.fft.fftshift(s.data, axes=0)
    lo_keep = (m - length) // 2
    centered = centered[lo_keep:lo_keep + length, :]

    width = length // n_sub
    extra = int(round(overlap * width / 2.0))
    out: list[AzimuthSpectrum] = []
    centers_hz: list[float] = []
    lo_bin = -(length // 2)
    for i in range(n_sub):
        start = i * width - extra
        stop = (i + 1) * width + extra
        start_c = max(start, 0)
        stop_c = min(stop, length)
        taper = _band_prototype(stop - start, alpha)[start_c - start:stop_c - start]
        band = np.zeros(centered.shape, dtype=np.complex128)
        band[start_c:stop_c, :] = centered[start_c:stop_c, :] * taper[:, None]
        out.append(s.with_data(np.fft.ifftshift(band, axes=0)))
        centers_hz.append((lo_bin + i * width + (width - 1) / 2.0) * s.prf / length)
    return out, centers_hz


def boxfilter_decimate(img: np.ndarray, k: int = 10) -> np.ndarray:
    """Non-overlapping k x k block means (each coefficient 1/k^2).

    Output dims floor-divide the input dims; trailing partial blocks drop.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("expected a 2-D grid")
    rows, cols = img.shape
    if rows < k or cols < k:
        raise ValueError(f"grid {img.shape} smaller than {k}x{k} filter")
    r, c = rows // k, cols // k
    blocks = img[: r * k, : c * k].reshape(r, k, c, k)
    return blocks.mean(axis=(1, 3))


def detect(x: np.ndarray, mode: str = "magnitude") -> np.ndarray:
    """Detection of a complex field: |x| (default) or |x|^2."""
    if mode == "magnitude":
        return np.abs(x)
    if mode == "power":
        return np.abs(x) ** 2
    raise ValueError(f"unknown detection mode {mode!r}")


def vignette_magnitude_decimated(
    v: ComplexVignette,
    profile: CalibrationProfile | None = None,
    k: int = 10,
    detection: str = "magnitude",
) -> np.ndarray:
    """Calibrated, detected and decimated vignette (no subaperture split)."""
    calibrated = calibrate_sigma0(v, profile or CalibrationProfile.ones(v.cols))
    return boxfilter_decimate(detect(calibrated.data, detection), k)


def subaperture_decompose(
    v: ComplexVignette,
    profile: CalibrationProfile | None = None,
    n_sub: int = 4,
    alpha: float = 0.75,
    k: int = 10,
    detection: str = "magnitude",
) -> SubapertureSet:
    """Full pipeline: calibrate, DFT, compensate, split, iDFT, detect, decimate.

    ``sub_slc`` holds the full-resolution complex sub-looks (consumed by the
    Doppler estimator); ``sub_mag_decimated`` the detected decimated grids.
    """
    if n_sub < 2:
        raise ValueError("subaperture decomposition needs n_sub >= 2")
    calibrated = calibrate_sigma0(v, profile or CalibrationProfile.ones(v.cols))
    spectrum = hamming_compensate(azimuth_dft(calibrated), alpha)
    bands, centers = make_subapertures(spectrum, n_sub=n_sub, alpha=alpha)
    sub_slc = [azimuth_idft(b).data for b in bands]
    sub_mag = [boxfilter_decimate(detect(x, detection), k) for x in sub_slc]
    return SubapertureSet(
        source_id=v.id,
        n_sub=n_sub,
        sub_slc=sub_slc,
        sub_mag_decimated=sub_mag,
        band_centers_hz=centers,
        prf=v.prf,
        azimuth_spacing=v.azimuth_spacing,
        range_spacing=v.range_spacing,
        meta=v.meta,
    )


def write_raster(grid: np.ndarray, path: str | Path, descriptor: dict) -> None:
    """Flat little-endian f32 raster plus JSON descriptor ``<path>.json``."""
    grid = np.asarray(grid)
    if grid.ndim != 2:
        raise ValueError("raster grids are 2-D")
    path = Path(path)
    path.write_bytes(np.ascontiguousarray(grid, dtype="<f4").tobytes())
    desc = {"rows": grid.shape[0], "cols": grid.shape[1], **descriptor}
    Path(str(path) + ".json").write_text(json.dumps(desc, sort_keys=True))


def read_raster(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    desc = json.loads(Path(str(path) + ".json").read_text())
    rows, cols = int(desc["rows"]), int(desc["cols"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f4")
    if raw.size != rows * cols:
        raise ValueError(f"{path}: raster payload does not match descriptor dims")
    return raw.reshape(rows, cols).astype(np.float64), desc
