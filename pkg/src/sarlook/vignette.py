"""SLC vignette data model and SARV on-disk format.

A vignette is a small single-look-complex ocean tile: a 2-D complex grid
whose row axis is azimuth (slow time, sampled at the PRF) and whose column
axis is range. The azimuth-as-rows orientation is normative for the whole
package; every downstream module relies on it.

SARV binary layout (little-endian):

    magic   4 bytes  b"SARV"
    version u16      currently 1
    reserved u16     0
    rows    u32
    cols    u32
    prf     f64      Hz
    azimuth_spacing f64  meters
    range_spacing   f64  meters
    payload rows*cols interleaved (re f32, im f32), row-major

A JSON sidecar ``<path>.json`` carries the id and acquisition metadata.
Samples are stored as 32-bit floats (matching typical SLC products); all
in-memory processing uses double precision.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SARV_MAGIC = b"SARV"
SARV_VERSION = 1
_HEADER = struct.Struct("<4sHHIIddd")

#: Class abbreviations, index == class_label.
CLASS_ABBREV = ("POW", "WS", "MCC", "RC", "BS", "SI", "Ic", "LWA", "AF", "OF")

CLASS_NAMES = {
    "POW": "Pure Ocean Waves",
    "WS": "Wind Streaks",
    "MCC": "Micro Convective Cells",
    "RC": "Rain Cells",
    "BS": "Biological Slicks",
    "SI": "Sea Ice",
    "Ic": "Iceberg",
    "LWA": "Low Wind Area",
    "AF": "Atmospheric Front",
    "OF": "Oceanic Front",
}


class FormatError(ValueError):
    """Raised when an on-disk artifact is malformed or unsupported."""


@dataclass(frozen=True)
class VignetteMeta:
    """Optional acquisition metadata attached to a vignette."""

    class_label: int | None = None
    lat: float | None = None
    lon: float | None = None
    timestamp: str | None = None

    def __post_init__(self) -> None:
        if self.class_label is not None and not 0 <= int(self.class_label) <= 9:
            raise ValueError(f"class_label must be in [0, 9], got {self.class_label}")
        if self.lat is not None and not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"lat out of range: {self.lat}")
        if self.lon is not None and not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"lon out of range: {self.lon}")

    def to_dict(self) -> dict:
        return {
            "class_label": None if self.class_label is None else int(self.class_label),
            "lat": self.lat,
            "lon": self.lon,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VignetteMeta":
        return cls(
            class_label=d.get("class_label"),
            lat=d.get("lat"),
            lon=d.get("lon"),
            timestamp=d.get("timestamp"),
        )


@dataclass(frozen=True)
class ComplexVignette:
    """A single-look-complex vignette: rows = azimuth, cols = range."""

    id: str
    data: np.ndarray
    prf: float
    azimuth_spacing: float
    range_spacing: float
    meta: VignetteMeta = field(default_factory=VignetteMeta)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 2:
            raise ValueError(f"vignette data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2 or arr.shape[1] < 1:
            raise ValueError(f"vignette needs >= 2 azimuth rows and >= 1 range column, got {arr.shape}")
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ValueError("vignette contains non-finite samples")
        if not self.prf > 0:
            raise ValueError(f"prf must be > 0, got {self.prf}")
        if not self.azimuth_spacing > 0 or not self.range_spacing > 0:
            raise ValueError("pixel spacings must be > 0")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, suffix: str | None = None) -> "ComplexVignette":
        """New vignette with the same geometry/metadata but different samples."""
        return ComplexVignette(
            id=self.id if suffix is None else f"{self.id}{suffix}",
            data=data,
            prf=self.prf,
            azimuth_spacing=self.azimuth_spacing,
            range_spacing=self.range_spacing,
            meta=self.meta,
        )


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def write_vignette(v: ComplexVignette, path: str | Path) -> None:
    """Write ``v`` in the SARV format plus its JSON sidecar.

    Complex samples are quantized to float32 pairs on disk; a vignette whose
    samples are exactly float32-representable round-trips bit-exactly.
    """
    path = Path(path)
    if not path.parent.exists():
        raise FileNotFoundError(f"parent directory does not exist: {path.parent}")
    header = _HEADER.pack(
        SARV_MAGIC,
        SARV_VERSION,
        0,
        v.rows,
        v.cols,
        float(v.prf),
        float(v.azimuth_spacing),
        float(v.range_spacing),
    )
    payload = np.empty((v.rows, v.cols, 2), dtype="<f4")
    payload[:, :, 0] = v.data.real
    payload[:, :, 1] = v.data.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())
    sidecar = {"id": v.id, **v.meta.to_dict()}
    sidecar_path(path).write_text(json.dumps(sidecar, sort_keys=True))


def read_vignette(path: str | Path) -> ComplexVignette:
    """Read a SARV file and its sidecar; fails rather than returning partial data."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than SARV header")
    magic, version, _reserved, rows, cols, prf, az_sp, rg_sp = _HEADER.unpack_from(raw)
    if magic != SARV_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != SARV_VERSION:
        raise FormatError(f"{path}: unsupported SARV version {version}")
    expected = rows * cols * 8
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise FormatError(
            f"{path}: truncated payload, header declares {rows}x{cols} "
            f"({expected} bytes) but {len(body)} bytes present"
        )
    pairs = np.frombuffer(body, dtype="<f4").reshape(rows, cols, 2)
    data = pairs[:, :, 0].astype(np.float64) + 1j * pairs[:, :, 1].astype(np.float64)
    if not np.all(np.isfinite(pairs)):
        raise FormatError(f"{path}: payload contains non-finite samples")
    sc = sidecar_path(path)
    if not sc.exists():
        raise FormatError(f"{path}: missing JSON sidecar {sc}")
    side = json.loads(sc.read_text())
    return ComplexVignette(
        id=side["id"],
        data=data,
        prf=prf,
        azimuth_spacing=az_sp,
        range_spacing=rg_sp,
        meta=VignetteMeta.from_dict(side),
    )


def inject_doppler_ramp(v: ComplexVignette, f_hz: float) -> ComplexVignette:
    """Multiply every azimuth row m by exp(j*2*pi*f*m/prf).

    Magnitudes are preserved exactly; metadata is unchanged. |f| beyond
    prf/2 is rejected because the modulation would alias ambiguously.
    """
    if abs(f_hz) > v.prf / 2:
        raise ValueError(f"|f|={abs(f_hz)} Hz exceeds prf/2={v.prf / 2} Hz")
    if f_hz == 0.0:
        return v
    m = np.arange(v.rows, dtype=np.float64)[:, None]
    phase = np.exp(2j * np.pi * f_hz * m / v.prf)
    return v.with_data(v.data * phase)
