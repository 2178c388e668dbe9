import numpy as np
import pytest

from sarlook.vignette import ComplexVignette, VignetteMeta


def random_vignette(rng, rows, cols, prf=1600.0, f32_exact=True, vid="v"):
    """Random complex vignette; f32_exact quantizes samples so SARV
    round-trips are bit-exact."""
    data = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    if f32_exact:
        data = data.real.astype(np.float32).astype(np.float64) \
            + 1j * data.imag.astype(np.float32).astype(np.float64)
    return ComplexVignette(
        id=vid,
        data=data,
        prf=prf,
        azimuth_spacing=5.0,
        range_spacing=5.0,
        meta=VignetteMeta(class_label=0, lat=10.0, lon=20.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
