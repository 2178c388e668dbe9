import numpy as np
import pytest

from sarlook.encoder.baseline import baseline_descriptor
from sarlook.encoder.stacks import (
    InputStack,
    build_representation_stacks,
    crop_to_multiple,
    normalize_stack,
)
from sarlook.synth import SynthParams, synth_vignette


class TestNormalizeStack:
    def test_constant_channel_maps_to_zeros(self):
        s = normalize_stack(np.full((1, 8, 8), 3.0), "c", "VIG")
        assert np.all(s.channels == 0)
        assert s.normalization_stats == ((3.0, 1.0),)

    def test_standardization(self, rng):
        s = normalize_stack(rng.standard_normal((1, 32, 32)) * 5 + 2, "v", "VIG")
        assert abs(s.channels[0].mean()) < 1e-10
        assert s.channels[0].std() == pytest.approx(1.0, abs=1e-9)

    def test_per_channel_stats(self, rng):
        a = rng.standard_normal((16, 16)) * 2 + 1
        b = rng.standard_normal((16, 16)) * 7 - 3
        s = normalize_stack(np.stack([a, b]), "v", "SUBAP")
        (m1, s1), (m2, s2) = s.normalization_stats
        assert m1 == pytest.approx(a.mean()) and s1 == pytest.approx(a.std())
        assert m2 == pytest.approx(b.mean()) and s2 == pytest.approx(b.std())

    def test_dimension_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            InputStack("v", rng.standard_normal((2, 8, 8)), "VIG", ((0.0, 1.0),))


def test_crop_to_multiple():
    g = np.arange(63 * 64, dtype=float).reshape(63, 64)
    out = crop_to_multiple(g, 8)
    assert out.shape == (56, 64)
    assert np.array_equal(out, g[3:59, :])  # centered
    with pytest.raises(ValueError):
        crop_to_multiple(np.ones((4, 4)), 8)


def test_build_representation_stacks_dims():
    v = synth_vignette(SynthParams(class_id=2, seed=8, rows=160, cols=160))
    stacks = build_representation_stacks(v)
    assert stacks["VIG"].shape == (1, 16, 16)
    assert stacks["SUBAP"].shape == (4, 16, 16)
    # Doppler grids lose one azimuth row before decimation: 15 rows -> crop to 8
    assert stacks["DOP_VIG"].shape == (1, 8, 16)
    assert stacks["DOP_SUBAP"].shape == (4, 8, 16)
    for tag, s in stacks.items():
        assert s.representation_tag == tag
        assert s.source_id == v.id


class TestBaselineDescriptor:
    def test_deterministic_and_dimension(self, rng):
        s = normalize_stack(rng.standard_normal((2, 32, 32)), "v", "SUBAP")
        e1 = baseline_descriptor(s)
        e2 = baseline_descriptor(s)
        assert np.array_equal(e1.vector, e2.vector)
        assert e1.dimension == 64  # 32 per channel
        assert e1.encoder_tag == "BASELINE"

    def test_histogram_rotation_invariant_acf_not(self, rng):
        # rotation preserves the value distribution (histogram block) and the
        # radial spectrum average (rotation-invariant by construction), while
        # the azimuth-marginal autocorrelation tracks orientation
        ch = rng.standard_normal((32, 48)) * 0.1
        ch += np.sin(np.arange(32) * 0.7)[:, None]
        s = normalize_stack(ch[None], "v", "VIG")
        rot = normalize_stack(np.rot90(ch)[None].copy(), "v", "VIG")
        e, er = baseline_descriptor(s), baseline_descriptor(rot)
        assert np.allclose(e.vector[:8], er.vector[:8], atol=1e-12)
        assert not np.allclose(e.vector[24:32], er.vector[24:32])

    def test_zero_stack(self):
        s = normalize_stack(np.full((1, 32, 32), 5.0), "v", "VIG")  # constant -> zeros
        e = baseline_descriptor(s)
        hist, spectrum, acf = e.vector[:8], e.vector[8:24], e.vector[24:32]
        assert hist.sum() == pytest.approx(1.0)
        assert hist[4] == pytest.approx(1.0)  # all mass in the bin holding 0
        assert np.all(spectrum == 0.0)  # log1p(0)
        assert np.all(acf == 0.0)

    def test_too_small_rejected(self, rng):
        s = normalize_stack(rng.standard_normal((1, 8, 8)), "v", "VIG")
        with pytest.raises(ValueError, match="too small"):
            baseline_descriptor(s)
