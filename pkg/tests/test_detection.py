import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperimage.detection import (
    DetectorConfig,
    ImageFrame,
    accidental_rate_per_px,
    accumulate,
    add_uniform_counts,
    apply_visibility,
    bin_frame,
    export_frame,
    load_frame_csv,
    noise_metric,
    poisson_flatness_pvalue,
    subtract_background,
)
from hyperimage.pnm import read_pgm


def frame(counts, **kw):
    return ImageFrame(np.asarray(counts, dtype=float), 0.026, **kw)


def test_config_validation():
    with pytest.raises(ValueError, match="visibility"):
        DetectorConfig(visibility=1.5)
    with pytest.raises(ValueError, match="accidental_ratio"):
        DetectorConfig(accidental_ratio=0.0)
    with pytest.raises(ValueError, match="dark"):
        DetectorConfig(dark_rate_hz_per_px=-1)


@given(st.floats(0, 1), st.floats(0, 1))
def test_visibility_interpolates(p, v):
    assert apply_visibility(p, v) == pytest.approx(v * p + (1 - v) / 4)
    assert apply_visibility(p, 1.0) == pytest.approx(p)
    assert apply_visibility(p, 0.0) == pytest.approx(0.25)


def test_zero_everything_gives_zero_frame(rng):
    cfg = DetectorConfig(dark_rate_hz_per_px=0.0)
    out = accumulate(frame(np.zeros((5, 5))), cfg, 600.0, rng, reference_signal_rate=0.0)
    assert np.all(out.counts == 0)


def test_accidental_ratio_is_honoured():
    cfg = DetectorConfig(accidental_ratio=0.4)
    sig = np.zeros((10, 10))
    sig[3:6, 3:6] = 2.0
    out = accumulate(frame(sig), cfg, 10.0)
    acc = out.counts.sum() - sig.sum() * 10
    assert sig.sum() * 10 / acc == pytest.approx(0.4)
    assert accidental_rate_per_px(40.0, cfg, 100) == pytest.approx(1.0)


def test_accumulate_rejects_negative_rates():
    with pytest.raises(ValueError):
        accumulate(frame([[-1.0]]), DetectorConfig(), 1.0)


def test_poisson_noise_metric_at_mean_69():
    rng = np.random.default_rng(7)
    f = frame(rng.poisson(69.0, (50, 50)))
    assert noise_metric(f) == pytest.approx(1 / np.sqrt(69), abs=0.01)
    assert 1 / np.sqrt(69) == pytest.approx(0.1204, abs=1e-4)


def test_noise_metric_scales_with_exposure():
    rng = np.random.default_rng(8)
    sig = frame(np.full((60, 60), 0.1))
    cfg = DetectorConfig(accidental_ratio=1e9)
    m = [noise_metric(accumulate(sig, cfg, t, rng)) for t in (200.0, 800.0, 3200.0)]
    assert m[0] / m[1] == pytest.approx(2.0, rel=0.1)
    assert m[1] / m[2] == pytest.approx(2.0, rel=0.1)


def test_noise_metric_edge_cases():
    assert noise_metric(frame(np.full((60, 60), 5.0))) == 0.0
    assert np.isnan(noise_metric(frame(np.zeros((60, 60)))))
    with pytest.raises(ValueError, match="fit"):
        noise_metric(frame(np.ones((20, 20))))
    assert noise_metric(frame(np.ones((20, 20))), region=(0, 0, 10)) == 0.0


def test_monte_carlo_mean_converges():
    sig = np.linspace(0.0, 0.2, 16).reshape(4, 4)
    cfg = DetectorConfig(accidental_ratio=0.5, dark_rate_hz_per_px=0.01)
    expected = accumulate(frame(sig), cfg, 100.0).counts
    draws = np.array([accumulate(frame(sig), cfg, 100.0, np.random.default_rng(s)).counts for s in range(100)])
    se = np.sqrt(expected / 100)
    assert np.all(np.abs(draws.mean(axis=0) - expected) < 3.5 * se)


def test_subtract_background_keeps_negatives():
    a = frame([[1.0, 5.0]], exposure_s=10)
    b = frame([[3.0, 2.0]], exposure_s=10)
    c = subtract_background(a, b)
    np.testing.assert_array_equal(c.counts, [[-2.0, 3.0]])
    assert c.corrected and not a.corrected


@pytest.mark.parametrize(
    "other",
    [
        ImageFrame(np.zeros((1, 3)), 0.026, 10),
        ImageFrame(np.zeros((1, 2)), 0.05, 10),
        ImageFrame(np.zeros((1, 2)), 0.026, 11),
        ImageFrame(np.zeros((1, 2)), 0.026, 10, origin=(1.0, 0.0)),
    ],
)
def test_subtract_background_validates_geometry(other):
    with pytest.raises(ValueError):
        subtract_background(ImageFrame(np.zeros((1, 2)), 0.026, 10), other)


def test_identical_poisson_frames_subtract_to_zero_mean():
    rng = np.random.default_rng(9)
    a = frame(rng.poisson(69.0, (100, 100)), exposure_s=600)
    b = frame(rng.poisson(69.0, (100, 100)), exposure_s=600)
    c = subtract_background(a, b).counts
    assert abs(c.mean()) < 3 * np.sqrt(2 * 69 / c.size)
    assert c.std() == pytest.approx(np.sqrt(2 * 69), rel=0.03)


def test_flatness_pvalue():
    rng = np.random.default_rng(10)
    a = frame(rng.poisson(50.0, (64, 64)))
    b = frame(rng.poisson(50.0, (64, 64)))
    assert poisson_flatness_pvalue(a, b) > 0.01
    c = frame(rng.poisson(50.0, (64, 64)) + np.where(np.arange(64) < 32, 40, 0)[None, :])
    assert poisson_flatness_pvalue(c, b) < 1e-6


def test_bin_frame_drops_partial_blocks():
    out = bin_frame(np.ones((10, 9)), 4)
    np.testing.assert_array_equal(out, np.full((2, 2), 16.0))


def test_add_uniform_counts(rng):
    f = frame(np.zeros((200, 200)))
    assert np.all(add_uniform_counts(f, 3.0, None).counts == 3.0)
    assert add_uniform_counts(f, 3.0, rng).counts.mean() == pytest.approx(3.0, rel=0.02)


def test_export_roundtrip(tmp_path):
    f = ImageFrame(np.array([[0.1, -2.5], [1e-17, 7.0]]), 0.026, 600.0, metadata={"seed": np.int64(3)})
    paths = export_frame(f, tmp_path / "img")
    assert [p.suffix for p in paths] == [".csv", ".pgm", ".json"]
    back = load_frame_csv(paths[0], 0.026)
    np.testing.assert_array_equal(back.counts, f.counts)
    side = json.loads(paths[2].read_text())
    assert side["shape"] == [2, 2] and side["metadata"]["seed"] == 3
    pgm = read_pgm(paths[1])
    # top row of the file is the last array row; min maps to 0, max to 65535
    assert pgm[0, 1] == 65535 and pgm[1, 1] == 0
    scale = side["pgm_scale"]
    np.testing.assert_allclose(np.flipud(pgm) * scale["counts_per_level"] + scale["offset"], f.counts, atol=1e-3)


def test_with_counts_copies_metadata():
    f = frame([[1.0]], metadata={"a": {"b": 1}})
    g = f.with_counts(np.array([[2.0]]))
    g.metadata["a"]["b"] = 2
    assert f.metadata["a"]["b"] == 1
