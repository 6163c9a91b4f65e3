"""Gated ICCD camera model: coincidence accumulation, noise and background correction."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import pnm


@dataclass
class ImageFrame:
    """A camera-plane (or object-plane) image.

    ``counts`` holds expected counts (analytic backend), integer counts (Monte
    Carlo) or signed values after background subtraction (``corrected``).
    ``origin`` is the physical position of the grid centre in mm.
    """

    counts: np.ndarray
    pixel_pitch: float
    exposure_s: float = 0.0
    origin: tuple = (0.0, 0.0)
    corrected: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.pixel_pitch > 0:
            raise ValueError("pixel_pitch must be > 0")
        self.counts = np.asarray(self.counts)

    @property
    def shape(self):
        return self.counts.shape

    def coords(self):
        """Pixel-centre coordinates ``(x, y)`` as 1-D arrays in mm."""
        ny, nx = self.counts.shape
        x = self.origin[0] + (np.arange(nx) - (nx - 1) / 2) * self.pixel_pitch
        y = self.origin[1] + (np.arange(ny) - (ny - 1) / 2) * self.pixel_pitch
        return x, y

    def with_counts(self, counts, **changes) -> "ImageFrame":
        return replace(self, counts=counts, metadata=copy.deepcopy(self.metadata), **changes)


@dataclass(frozen=True)
class DetectorConfig:
    """Camera and coincidence-electronics parameters.

    ``pair_rate_hz`` is the rate of detected pairs reaching the optics with
    detector efficiency folded in, so ``n_pairs = pair_rate_hz * exposure``.
    ``accidental_ratio`` is total true coincidences over total accidentals at
    the reference (unmodulated) setting.
    """

    pair_rate_hz: float = 2000.0
    accidental_ratio: float = 0.40
    dark_rate_hz_per_px: float = 0.0
    visibility: float = 1.0
    gate_insertion_delay_ns: float = 20.0

    def __post_init__(self):
        if not self.pair_rate_hz >= 0:
            raise ValueError("detector.pair_rate_hz must be >= 0")
        if not self.accidental_ratio > 0:
            raise ValueError("detector.accidental_ratio must be > 0")
        if not self.dark_rate_hz_per_px >= 0:
            raise ValueError("detector.dark_rate_hz_per_px must be >= 0")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("detector.visibility must lie in [0, 1]")


def apply_visibility(probability, v: float):
    """Mix an ideal polariser-pair probability with the unpolarised value 1/4."""
    return v * np.asarray(probability) + (1.0 - v) / 4.0


def accidental_rate_per_px(reference_signal_rate: float, cfg: DetectorConfig, n_pixels: int) -> float:
    return reference_signal_rate / cfg.accidental_ratio / n_pixels


def accumulate(expected: ImageFrame, cfg: DetectorConfig, exposure_s: float,
               rng: np.random.Generator | None = None,
               reference_signal_rate: float | None = None) -> ImageFrame:
    """Expose the camera to a signal-rate image for ``exposure_s`` seconds.

    ``expected.counts`` are signal rates in Hz per pixel.  Accidentals are
    uniform and sized from ``reference_signal_rate`` (total Hz; defaults to
    the signal itself).  With ``rng=None`` the expectation is returned.
    """
    rates = np.asarray(expected.counts, dtype=float)
    if np.any(rates < 0):
        raise ValueError("signal rates must be non-negative")
    ref = rates.sum() if reference_signal_rate is None else reference_signal_rate
    acc = accidental_rate_per_px(ref, cfg, rates.size)
    mean = (rates + acc + cfg.dark_rate_hz_per_px) * exposure_s
    if rng is None:
        counts = mean
    else:
        counts = rng.poisson(mean)
    frame = expected.with_counts(counts, exposure_s=exposure_s, corrected=False)
    frame.metadata["noise"] = "expected" if rng is None else "poisson"
    return frame


def add_uniform_counts(frame: ImageFrame, mean_per_px: float, rng: np.random.Generator | None) -> ImageFrame:
    """Add uniform accidental/dark counts (Poisson if ``rng`` is given)."""
    if rng is None:
        extra = np.full(frame.shape, float(mean_per_px))
        return frame.with_counts(frame.counts + extra)
    extra = rng.poisson(mean_per_px, frame.shape)
    return frame.with_counts(frame.counts + extra)


def subtract_background(frame: ImageFrame, background: ImageFrame) -> ImageFrame:
    """Pixelwise ``frame - background``; negative values are kept."""
    if frame.shape != background.shape:
        raise ValueError(f"frame shape {frame.shape} != background shape {background.shape}")
    if not np.isclose(frame.pixel_pitch, background.pixel_pitch, rtol=1e-12, atol=0):
        raise ValueError("frame and background pixel pitch differ")
    if not np.allclose(frame.origin, background.origin, rtol=0, atol=1e-9):
        raise ValueError("frame and background origin differ")
    if frame.exposure_s != background.exposure_s:
        raise ValueError(f"exposure mismatch: {frame.exposure_s} s vs {background.exposure_s} s")
    diff = np.asarray(frame.counts, dtype=float) - np.asarray(background.counts, dtype=float)
    out = frame.with_counts(diff, corrected=True)
    out.metadata["background"] = background.metadata.get("label", "background")
    return out


def noise_metric(frame: ImageFrame, region=None) -> float:
    """Standard deviation over mean of counts in ``region``.

    ``region`` is ``(row0, col0, size)``; by default the central 50x50 block.
    Returns ``nan`` when the mean is zero.
    """
    ny, nx = frame.shape
    if region is None:
        size = 50
        r0, c0 = (ny - size) // 2, (nx - size) // 2
    else:
        r0, c0, size = region
    if r0 < 0 or c0 < 0 or r0 + size > ny or c0 + size > nx:
        raise ValueError(f"region {size}x{size} at ({r0}, {c0}) does not fit a {ny}x{nx} frame")
    block = np.asarray(frame.counts[r0 : r0 + size, c0 : c0 + size], dtype=float)
    mean = block.mean()
    if mean == 0:
        return float("nan")
    return float(block.std() / mean)


def poisson_flatness_pvalue(frame: ImageFrame, background: ImageFrame, bin_size: int = 8) -> float:
    """Chi-square p-value that ``frame`` and ``background`` share one expectation.

    Both frames are binned ``bin_size`` x ``bin_size``; under the null each
    binned difference has variance ``raw + background``.
    """
    from scipy import stats

    a = bin_frame(np.asarray(frame.counts, dtype=float), bin_size)
    b = bin_frame(np.asarray(background.counts, dtype=float), bin_size)
    var = a + b
    ok = var > 0
    chi2 = float(np.sum((a[ok] - b[ok]) ** 2 / var[ok]))
    return float(stats.chi2.sf(chi2, int(ok.sum())))


def bin_frame(counts: np.ndarray, b: int) -> np.ndarray:
    """Sum ``b`` x ``b`` blocks; trailing rows/columns that do not fill a block are dropped."""
    ny, nx = counts.shape
    ny, nx = ny - ny % b, nx - nx % b
    return counts[:ny, :nx].reshape(ny // b, b, nx // b, b).sum(axis=(1, 3))


# ---------------------------------------------------------------- export

def export_frame(frame: ImageFrame, stem) -> list:
    """Write ``stem.csv``, ``stem.pgm`` and ``stem.json``; return the paths."""
    stem = Path(stem)
    csv_path = stem.with_suffix(".csv")
    pgm_path = stem.with_suffix(".pgm")
    json_path = stem.with_suffix(".json")
    counts = np.asarray(frame.counts, dtype=float)
    # rows written top (max y) first to match image viewers
    np.savetxt(csv_path, np.flipud(counts), delimiter=",", fmt="%.17g")
    lo, hi = float(counts.min()), float(counts.max())
    scale = 65535.0 / (hi - lo) if hi > lo else 0.0
    pnm.write_pgm(pgm_path, np.rint((np.flipud(counts) - lo) * scale).astype(np.int64), maxval=65535)
    sidecar = {
        "shape": list(frame.shape),
        "pixel_pitch_mm": frame.pixel_pitch,
        "origin_mm": list(frame.origin),
        "exposure_s": frame.exposure_s,
        "corrected": frame.corrected,
        "pgm_scale": {"offset": lo, "counts_per_level": (1.0 / scale) if scale else 0.0},
        "metadata": frame.metadata,
    }
    with open(json_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return [csv_path, pgm_path, json_path]


def load_frame_csv(path, pixel_pitch: float, exposure_s: float = 0.0) -> ImageFrame:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return ImageFrame(np.flipud(rows), pixel_pitch, exposure_s)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
