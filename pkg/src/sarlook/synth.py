"""Parametric synthetic SLC vignettes for the ten ocean classes.

The generator stands in for real WV acquisitions at desk scale. Every
vignette is fully developed speckle (i.i.d. circular complex Gaussian)
multiplied by a class-specific real intensity texture:

    POW  2-D sinusoidal modulation, wavelength 100-400 m, random direction
    WS   anisotropic streaks (1-D low-pass noise along a random direction)
    MCC  blob field from thresholded smoothed noise
    RC   dark disc(s) with a bright rim
    BS   thin dark filaments (near-zero level sets of smooth noise)
    SI   piecewise-constant mosaic
    Ic   a few isolated bright point targets on a dark background
    LWA  uniformly low intensity, -10 dB relative to the other classes
    AF   intensity step edge with streak texture on the bright side
    OF   plain intensity step edge

Textures are normalized to unit spatial mean intensity (except LWA at 0.1
and Ic, which keeps its dark background), so mean |x|^2 is ~1 for most
classes and ~0.1 for LWA.

Ocean phenomena also move, so each class carries a surface-motion Doppler
texture coupled to the same geometry: wave orbital velocity for POW (a
sinusoid in quadrature with the intensity pattern), gust streaks for WS,
convective cells for MCC, downdraft outflow at rain cells, damped
fluctuations on slicks, a velocity step across fronts, and (near) zero for
the rigid or calm classes SI, Ic and LWA. The field has zero spatial mean,
peak amplitude ``doppler_texture_hz``, and is injected as a cumulative
azimuth phase, which is how relative surface motion enters a real SLC:
lag-1 estimation on (band-limited) data recovers it. Set
``doppler_texture_hz=0`` for intensity-only output.

Real SLC products are azimuth band-limited, and two distinct spectral
shapes matter. The intrinsic antenna/illumination pattern rides on the
scene: local surface motion shifts it, which is what makes Doppler
anomalies observable in band-passed looks. The processing window (Hamming,
coefficient 0.75 here as in the compensation stage that divides it out) is
applied by the processor at a fixed Doppler reference and does not move.
The generator models the first as a flat-top azimuth pattern with
raised-cosine skirts (``antenna_bandwidth_fraction`` of the PRF wide,
rolling off over ``antenna_rolloff_fraction`` of the PRF) applied before
the motion phase, and the second as a fixed Hamming weighting
(``azimuth_taper_alpha``) applied after it. This matters: lag-1 Doppler estimation carries no
information on strictly white speckle (the phase contributions of shared
samples cancel), and motion survives into fixed sub-bands only through the
moving intrinsic pattern. Set either shape to None to disable it;
disabling both gives strictly i.i.d. samples.

Determinism contract: all randomness comes from numpy's PCG64 seeded with
``SeedSequence([class_id, seed, rows, cols])``. Draws happen in a fixed
order: (1) speckle real part, (2) speckle imaginary part, (3) extra look
intensities when speckle_looks > 1, (4) lat/lon, (5) the class texture's
own parameter and noise draws as coded below (intensity and motion fields
share their geometry parameters). Identical SynthParams give bit-identical
vignettes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .vignette import CLASS_ABBREV, ComplexVignette, VignetteMeta, inject_doppler_ramp

DEFAULT_PRF = 1600.0
DEFAULT_SPACING = 5.0
DEFAULT_DOPPLER_TEXTURE_HZ = 45.0
DEFAULT_AZIMUTH_TAPER = 0.75
DEFAULT_ANTENNA_BANDWIDTH_FRACTION = 0.9
DEFAULT_ANTENNA_ROLLOFF_FRACTION = 0.12


@dataclass(frozen=True)
class SynthParams:
    class_id: int
    seed: int
    rows: int = 512
    cols: int = 512
    speckle_looks: int = 1
    doppler_ramp_hz: float = 0.0
    doppler_texture_hz: float = DEFAULT_DOPPLER_TEXTURE_HZ
    azimuth_taper_alpha: float | None = DEFAULT_AZIMUTH_TAPER
    antenna_bandwidth_fraction: float | None = DEFAULT_ANTENNA_BANDWIDTH_FRACTION
    antenna_rolloff_fraction: float = DEFAULT_ANTENNA_ROLLOFF_FRACTION

    def __post_init__(self) -> None:
        if not 0 <= self.class_id <= 9:
            raise ValueError(f"class_id must be in [0, 9], got {self.class_id}")
        if self.rows < 32 or self.cols < 32:
            raise ValueError("rows and cols must be >= 32 (one full 32x32 DCE window)")
        if self.speckle_looks < 1:
            raise ValueError("speckle_looks must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.doppler_texture_hz < 0:
            raise ValueError("doppler_texture_hz must be >= 0")
        if self.azimuth_taper_alpha is not None and not 0.5 <= self.azimuth_taper_alpha < 1.0:
            raise ValueError("azimuth_taper_alpha must be in [0.5, 1) or None")
        if self.antenna_bandwidth_fraction is not None and not 0 < self.antenna_bandwidth_fraction <= 1:
            raise ValueError("antenna_bandwidth_fraction must be in (0, 1] or None")
        if not self.antenna_rolloff_fraction > 0:
            raise ValueError("antenna_rolloff_fraction must be > 0")


def _speckle(rng: np.random.Generator, rows: int, cols: int, looks: int) -> np.ndarray:
    """Unit-mean-intensity complex speckle; looks > 1 reduces intensity variance."""
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    g = (re + 1j * im) / np.sqrt(2.0)
    if looks == 1:
        return g
    intensity = np.abs(g) ** 2
    for _ in range(looks - 1):
        re = rng.standard_normal((rows, cols))
        im = rng.standard_normal((rows, cols))
        intensity += np.abs((re + 1j * im) / np.sqrt(2.0)) ** 2
    intensity /= looks
    phase = np.exp(1j * np.angle(g))
    return np.sqrt(intensity) * phase


def _smooth_noise(rng: np.random.Generator, rows: int, cols: int, sigma: float) -> np.ndarray:
    return ndimage.gaussian_filter(rng.standard_normal((rows, cols)), sigma, mode="reflect")


def _standardize(a: np.ndarray) -> np.ndarray:
    s = a.std()
    return (a - a.mean()) / s if s > 0 else np.zeros_like(a)


def _coords_m(rows: int, cols: int, az_sp: float, rg_sp: float) -> tuple[np.ndarray, np.ndarray]:
    y = (np.arange(rows, dtype=np.float64) * az_sp)[:, None]
    x = (np.arange(cols, dtype=np.float64) * rg_sp)[None, :]
    return y, x


def _streak_field(rng, rows, cols, az_sp, rg_sp, theta, sigma_px, depth):
    """Lognormal-ish streaks: 1-D smoothed noise constant along direction theta."""
    y, x = _coords_m(rows, cols, az_sp, rg_sp)
    step = min(az_sp, rg_sp)
    u = (-x * np.sin(theta) + y * np.cos(theta)) / step
    u_idx = np.rint(u - u.min()).astype(np.intp)
    profile = rng.standard_normal(int(u_idx.max()) + 1)
    profile = ndimage.gaussian_filter1d(profile, sigma_px, mode="reflect")
    f = _standardize(profile[u_idx])
    return np.exp(depth * f), f


# Each builder returns (intensity texture, unit-scale motion pattern). The
# motion pattern is later zero-meaned and scaled by doppler_texture_hz.

def _texture_pow(rng, rows, cols, az_sp, rg_sp):
    wavelength = rng.uniform(100.0, 400.0)
    theta = rng.uniform(0.0, 2 * np.pi)
    phase = rng.uniform(0.0, 2 * np.pi)
    depth = rng.uniform(0.4, 0.8)
    y, x = _coords_m(rows, cols, az_sp, rg_sp)
    u = x * np.cos(theta) + y * np.sin(theta)
    t = 1.0 + depth * np.sin(2 * np.pi * u / wavelength + phase)
    # orbital velocity in quadrature with the intensity pattern
    motion = np.cos(2 * np.pi * u / wavelength + phase)
    return t, motion


def _texture_ws(rng, rows, cols, az_sp, rg_sp):
    theta = rng.uniform(0.0, 2 * np.pi)
    sigma = rng.uniform(4.0, 12.0)
    depth = rng.uniform(0.4, 0.7)
    t, profile = _streak_field(rng, rows, cols, az_sp, rg_sp, theta, sigma, depth)
    return t, profile  # downwind gust streaks share the streak geometry


def _texture_mcc(rng, rows, cols, az_sp, rg_sp):
    sigma = rng.uniform(8.0, 16.0)
    s = _smooth_noise(rng, rows, cols, sigma)
    cells = np.where(s > 0, 1.5, 0.6)
    t = ndimage.gaussian_filter(cells, 2.0, mode="reflect")
    return t, _standardize(s)  # convective gusts follow the cell pattern


def _texture_rc(rng, rows, cols, az_sp, rg_sp):
    t = np.ones((rows, cols))
    motion = np.zeros((rows, cols))
    n_cells = int(rng.integers(1, 4))
    yy = np.arange(rows, dtype=np.float64)[:, None]
    xx = np.arange(cols, dtype=np.float64)[None, :]
    for _ in range(n_cells):
        cy = rng.uniform(0.2 * rows, 0.8 * rows)
        cx = rng.uniform(0.2 * cols, 0.8 * cols)
        radius = rng.uniform(0.08, 0.2) * min(rows, cols)
        r = np.hypot(yy - cy, xx - cx)
        rim = max(2.0, 0.15 * radius)
        t = np.where(r < radius, 0.35, t)
        t = np.where((r >= radius) & (r < radius + rim), 1.9, t)
        # downdraft outflow: strongest at the rim, fading outward
        motion += np.exp(-((r - radius) / (2 * rim)) ** 2) - np.exp(-(r / radius) ** 2)
    return ndimage.gaussian_filter(t, 1.5, mode="reflect"), motion


def _texture_bs(rng, rows, cols, az_sp, rg_sp):
    sigma = rng.uniform(10.0, 20.0)
    tau = rng.uniform(0.08, 0.15)
    s = _standardize(_smooth_noise(rng, rows, cols, sigma))
    filaments = (np.abs(s) < tau).astype(np.float64)
    filaments = ndimage.gaussian_filter(filaments, 1.0, mode="reflect")
    damp = np.clip(filaments, 0.0, 1.0)
    t = 1.0 - 0.65 * damp
    # slicks damp the short-wave motion signal
    motion = 0.4 * s * (1.0 - 0.8 * damp)
    return t, motion


def _texture_si(rng, rows, cols, az_sp, rg_sp):
    sigma = rng.uniform(10.0, 24.0)
    n_levels = int(rng.integers(3, 7))
    levels = rng.uniform(0.3, 1.8, size=n_levels)
    s = _smooth_noise(rng, rows, cols, sigma)
    edges = np.quantile(s, np.linspace(0, 1, n_levels + 1)[1:-1])
    idx = np.searchsorted(edges, s)
    return levels[idx], np.zeros((rows, cols))  # rigid ice: no motion


def _texture_ic(rng, rows, cols, az_sp, rg_sp):
    t = np.full((rows, cols), 0.25)
    n_pts = int(rng.integers(3, 9))
    yy = np.arange(rows, dtype=np.float64)[:, None]
    xx = np.arange(cols, dtype=np.float64)[None, :]
    for _ in range(n_pts):
        cy = rng.uniform(0.1 * rows, 0.9 * rows)
        cx = rng.uniform(0.1 * cols, 0.9 * cols)
        amp = rng.uniform(20.0, 60.0)
        t += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * 1.2**2))
    return t, np.zeros((rows, cols))  # icebergs: rigid targets


def _texture_lwa(rng, rows, cols, az_sp, rg_sp):
    return np.full((rows, cols), 0.1), np.zeros((rows, cols))  # calm sea


def _front_geometry(rng, rows, cols, az_sp, rg_sp):
    theta = rng.uniform(0.0, 2 * np.pi)
    frac = rng.uniform(0.35, 0.65)
    y, x = _coords_m(rows, cols, az_sp, rg_sp)
    u = x * np.cos(theta) + y * np.sin(theta)
    return u > np.quantile(u, frac)


def _texture_af(rng, rows, cols, az_sp, rg_sp):
    bright = _front_geometry(rng, rows, cols, az_sp, rg_sp)
    t = ndimage.gaussian_filter(np.where(bright, 1.4, 0.6), 1.5, mode="reflect")
    theta = rng.uniform(0.0, 2 * np.pi)
    sigma = rng.uniform(4.0, 10.0)
    streaks, gusts = _streak_field(rng, rows, cols, az_sp, rg_sp, theta, sigma, 0.5)
    t = t * np.where(bright, streaks, 1.0)
    # wind shift across the front plus gustiness on the windy side
    motion = np.where(bright, 0.5, -0.5) + 0.3 * gusts * bright
    return t, motion


def _texture_of(rng, rows, cols, az_sp, rg_sp):
    bright = _front_geometry(rng, rows, cols, az_sp, rg_sp)
    t = ndimage.gaussian_filter(np.where(bright, 1.45, 0.55), 1.5, mode="reflect")
    # surface current step across the front
    return t, np.where(bright, 0.5, -0.5)


_TEXTURES = (
    _texture_pow,
    _texture_ws,
    _texture_mcc,
    _texture_rc,
    _texture_bs,
    _texture_si,
    _texture_ic,
    _texture_lwa,
    _texture_af,
    _texture_of,
)

#: Classes whose texture keeps its absolute level instead of unit-mean scaling.
_UNNORMALIZED = {6, 7}


def class_textures(
    class_id: int,
    rng: np.random.Generator,
    rows: int,
    cols: int,
    azimuth_spacing: float = DEFAULT_SPACING,
    range_spacing: float = DEFAULT_SPACING,
) -> tuple[np.ndarray, np.ndarray]:
    """(intensity texture, motion pattern) for one class.

    The intensity texture is positive with unit spatial mean unless noted;
    the motion pattern is zero-mean with peak magnitude normalized to 1
    (identically zero for the motionless classes).
    """
    t, motion = _TEXTURES[class_id](rng, rows, cols, azimuth_spacing, range_spacing)
    t = np.clip(t, 1e-6, None)
    if class_id not in _UNNORMALIZED:
        t = t / t.mean()
    motion = motion - motion.mean()
    peak = np.abs(motion).max()
    if peak > 0:
        motion = motion / peak
    return t, motion


def synth_vignette(
    p: SynthParams,
    prf: float = DEFAULT_PRF,
    azimuth_spacing: float = DEFAULT_SPACING,
    range_spacing: float = DEFAULT_SPACING,
    vignette_id: str | None = None,
) -> ComplexVignette:
    """Deterministic synthetic SLC vignette for one class.

    Same (class_id, seed, rows, cols) -> bit-identical samples.
    """
    seq = np.random.SeedSequence([p.class_id, p.seed, p.rows, p.cols])
    rng = np.random.Generator(np.random.PCG64(seq))
    speckle = _speckle(rng, p.rows, p.cols, p.speckle_looks)
    lat = rng.uniform(-60.0, 60.0)
    lon = rng.uniform(-180.0, 180.0)
    texture, motion = class_textures(p.class_id, rng, p.rows, p.cols,
                                     azimuth_spacing, range_spacing)
    if p.antenna_bandwidth_fraction is not None:
        # intrinsic illumination pattern: moves with the scene's motion
        f_k = np.abs(np.fft.fftfreq(p.rows, d=1.0 / prf))
        half = p.antenna_bandwidth_fraction * prf / 2
        roll = p.antenna_rolloff_fraction * prf
        pattern = np.where(
            f_k < half - roll, 1.0,
            np.where(f_k > half + roll, 0.0,
                     0.5 * (1 + np.cos(np.pi * (f_k - (half - roll)) / (2 * roll)))),
        )
        pattern = pattern / np.sqrt(np.mean(pattern**2))
        speckle = np.fft.ifft(np.fft.fft(speckle, axis=0) * pattern[:, None], axis=0)
    data = np.sqrt(texture) * speckle
    if p.doppler_texture_hz > 0 and np.any(motion != 0):
        doppler_hz = p.doppler_texture_hz * motion
        phase = 2 * np.pi * np.cumsum(doppler_hz, axis=0) / prf
        data = data * np.exp(1j * phase)
    if p.azimuth_taper_alpha is not None:
        # fixed processing window (what the compensation stage divides out)
        from .preprocess import hamming_window

        w = hamming_window(p.rows, p.azimuth_taper_alpha)
        w = w / np.sqrt(np.mean(w**2))
        data = np.fft.ifft(np.fft.fft(data, axis=0) * w[:, None], axis=0)
    abbrev = CLASS_ABBREV[p.class_id]
    vid = vignette_id or f"synth-{abbrev.lower()}-{p.seed:x}-{p.rows}x{p.cols}"
    v = ComplexVignette(
        id=vid,
        data=data,
        prf=prf,
        azimuth_spacing=azimuth_spacing,
        range_spacing=range_spacing,
        meta=VignetteMeta(class_label=p.class_id, lat=round(lat, 4), lon=round(lon, 4)),
    )
    if p.doppler_ramp_hz != 0.0:
        v = inject_doppler_ramp(v, p.doppler_ramp_hz)
    return v
