"""Post-processing: CHSH arithmetic, fringe and line fits, image level statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, stats

from .detection import ImageFrame
from .optics import TelescopeConfig, camera_to_object
from .pattern import PhasePattern, phase_at

_ANGLE_TOL = 1e-9


def _same_angle(a: float, b: float) -> bool:
    d = np.mod(a - b, 180.0)
    return min(d, 180.0 - d) < _ANGLE_TOL


@dataclass
class CorrelationTable:
    """Coincidence counts ``C(delta1, delta2)``; angles are compared modulo 180 deg."""

    rows: list = field(default_factory=list)

    def add(self, d1: float, d2: float, count: float) -> None:
        if count < 0:
            raise ValueError("coincidence counts must be >= 0")
        self.rows.append((float(d1), float(d2), float(count)))

    def find(self, d1: float, d2: float):
        for r1, r2, c in self.rows:
            if _same_angle(r1, d1) and _same_angle(r2, d2):
                return c
        return None

    def __len__(self):
        return len(self.rows)


def _four_settings(d1, d2):
    p1, p2 = d1 + 90.0, d2 + 90.0
    return [(d1, d2), (p1, p2), (d1, p2), (p1, d2)]


def expectation_E(table: CorrelationTable, d1: float, d2: float) -> float:
    """Correlation of the +-1 polarisation outcomes from four coincidence counts."""
    settings = _four_settings(d1, d2)
    counts = [table.find(a, b) for a, b in settings]
    missing = [s for s, c in zip(settings, counts) if c is None]
    if missing:
        raise KeyError(f"correlation table lacks settings {missing}")
    c_pp, c_qq, c_pq, c_qp = counts
    total = c_pp + c_qq + c_pq + c_qp
    if total == 0:
        warnings.warn(f"no coincidences at ({d1}, {d2}); E undefined", RuntimeWarning, stacklevel=2)
        return float("nan")
    return (c_pp + c_qq - c_pq - c_qp) / total


@dataclass
class CHSHReport:
    S: float
    E: dict
    angles: tuple
    table: CorrelationTable

    @property
    def abs_S(self) -> float:
        return abs(self.S)

    @property
    def violates_bound(self) -> bool:
        return self.abs_S > 2.0

    def to_dict(self) -> dict:
        return {
            "angles": {"delta1": self.angles[0], "delta1_prime": self.angles[1],
                       "delta2": self.angles[2], "delta2_prime": self.angles[3]},
            "E": [{"delta1": k[0], "delta2": k[1], "E": v} for k, v in self.E.items()],
            "S": self.S,
            "abs_S": self.abs_S,
            "classical_bound": 2.0,
            "violates_bound": self.violates_bound,
            "counts": [{"delta1": a, "delta2": b, "C": c} for a, b, c in self.table.rows],
        }


def chsh_S(table: CorrelationTable, d1: float, d1p: float, d2: float, d2p: float) -> CHSHReport:
    """``S = E(d1,d2) - E(d1',d2) + E(d1,d2') + E(d1',d2')``."""
    pairs = [(d1, d2), (d1p, d2), (d1, d2p), (d1p, d2p)]
    E = {p: expectation_E(table, *p) for p in pairs}
    S = E[pairs[0]] - E[pairs[1]] + E[pairs[2]] + E[pairs[3]]
    return CHSHReport(S=float(S), E=E, angles=(d1, d1p, d2, d2p), table=table)


@dataclass
class Sin2Fit:
    visibility: float
    phase_offset: float
    amplitude: float
    rms_residual: float
    floor: float = 0.0


def fit_sin2(delta1, rate, delta2: float = 0.0, floor: float = 0.0) -> Sin2Fit:
    """Fit ``A (1 - v cos 2(d1 - d2 - theta0)) / 2 + floor`` to a polariser scan.

    ``floor`` is a known additive offset; it is not identifiable from the
    scan alone.  The fit is linear in ``(1, cos 2D, sin 2D)``.  Angles in
    degrees; ``phase_offset`` is returned in degrees.
    """
    d = np.asarray(delta1, dtype=float)
    y = np.asarray(rate, dtype=float) - floor
    n = d.size
    if n < 8:
        raise ValueError(f"need at least 8 scan points, got {n}")
    span = d.max() - d.min()
    if span < 180.0 * (1 - 1.0 / n) - 1e-9:
        raise ValueError(f"scan spans {span} deg; cover a full 180 deg period")
    t = np.deg2rad(2.0 * (d - delta2))
    A = np.column_stack([np.ones(n), np.cos(t), np.sin(t)])
    (c0, c1, c2), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([c0, c1, c2])
    rms = float(np.sqrt(np.mean(resid**2)))
    amp = float(np.hypot(c1, c2))
    if c0 <= 0 or amp <= 1e-12 * max(abs(c0), 1e-300):
        warnings.warn("degenerate scan: no fringe found, visibility set to 0", RuntimeWarning, stacklevel=2)
        return Sin2Fit(0.0, 0.0, float(2 * c0), rms, floor)
    theta0 = float(np.rad2deg(np.arctan2(-c2, -c1)) / 2.0)
    return Sin2Fit(amp / c0, theta0, float(2 * c0), rms, floor)


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r: float
    slope_stderr: float


def linear_fit(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.all(x == x[0]):
        raise ValueError("linear fit needs at least two distinct x values")
    if np.all(y == y[0]):
        return LinearFit(0.0, float(y[0]), float("nan"), 0.0)
    res = stats.linregress(x, y)
    return LinearFit(float(res.slope), float(res.intercept), float(res.rvalue), float(res.stderr))


# ------------------------------------------------------------ image levels

def frame_phase_map(frame: ImageFrame, pattern: PhasePattern, telescope: TelescopeConfig,
                    supersample: int = 1):
    """Pattern phase behind each (sub)pixel of a camera frame.

    Returns ``(phase, sub_pitch)`` with shape ``(ny*s, nx*s)``.
    """
    s = supersample
    ny, nx = frame.shape
    p = frame.pixel_pitch / s
    x = frame.origin[0] + (np.arange(nx * s) - (nx * s - 1) / 2) * p
    y = frame.origin[1] + (np.arange(ny * s) - (ny * s - 1) / 2) * p
    X, Y = np.meshgrid(x, y)
    xo, yo = camera_to_object(X, Y, telescope)
    return phase_at(pattern, xo, yo), p


def interior_mask(frame: ImageFrame, pattern: PhasePattern, telescope: TelescopeConfig,
                  margin_mm: float | None = None, supersample: int | None = None):
    """Pixels further than ``margin_mm`` (camera plane) from any phase edge.

    The default margin is one PSF FWHM scaled to the camera.  The frame border
    counts as an edge.  Returns ``(mask, phase_at_pixel)``.
    """
    if margin_mm is None:
        margin_mm = telescope.resolution_fwhm * telescope.demag
    s = supersample or int(frame.metadata.get("binning", 1))
    phase, sub_p = frame_phase_map(frame, pattern, telescope, s)
    ok = np.zeros(phase.shape, dtype=bool)
    for level in np.unique(phase):
        same = np.pad(phase == level, 1, constant_values=False)
        dist = ndimage.distance_transform_edt(same)[1:-1, 1:-1] * sub_p
        ok |= (phase == level) & (dist > margin_mm * (1 + 1e-9))
    ny, nx = frame.shape
    mask = ok.reshape(ny, s, nx, s).all(axis=(1, 3))
    centre = phase.reshape(ny, s, nx, s)[:, s // 2, :, s // 2]
    return mask, centre


@dataclass
class LevelReport:
    """Interior levels of a two-level image.

    ``level_low`` is the mean over pixels behind the lower pattern phase
    (phi = 0), ``level_high`` over the higher phase (phi = pi).  ``contrast``
    is ``(high - low) / (|high| + |low|)`` so that background-subtracted
    (possibly negative) levels keep it within [-1, 1].
    """

    level_low: float
    level_high: float
    contrast: float
    edge_width_mm: float
    n_low: int
    n_high: int


def level_report(corrected: ImageFrame, pattern: PhasePattern, telescope: TelescopeConfig,
                 margin_mm: float | None = None) -> LevelReport:
    mask, phase = interior_mask(corrected, pattern, telescope, margin_mm)
    levels = np.unique(phase[mask])
    if levels.size < 2:
        raise ValueError("no interior pixels on both pattern levels; the pattern is finer than the PSF")
    lo_sel = mask & (phase == levels[0])
    hi_sel = mask & (phase == levels[-1])
    counts = np.asarray(corrected.counts, dtype=float)
    low = float(counts[lo_sel].mean())
    high = float(counts[hi_sel].mean())
    denom = abs(high) + abs(low)
    contrast = (high - low) / denom if denom > 0 else 0.0
    width = transition_width(corrected, mask, phase)
    return LevelReport(low, high, float(contrast), width, int(lo_sel.sum()), int(hi_sel.sum()))


def _edge_segments(mask: np.ndarray, phase: np.ndarray):
    """Yield 1-D index runs crossing one phase edge, endpoints interior.

    Each item is ``(axis, line, start, stop)`` where ``start`` and ``stop``
    are interior pixels of different phase with only edge pixels between.
    """
    for axis in (0, 1):
        m = mask if axis == 1 else mask.T
        ph = phase if axis == 1 else phase.T
        for line in range(m.shape[0]):
            idx = np.flatnonzero(m[line])
            for a, b in zip(idx[:-1], idx[1:]):
                if b - a > 1 and ph[line, a] != ph[line, b]:
                    yield axis, line, a, b


def _line(values, axis, line):
    return values[line] if axis == 1 else values[:, line]


def _crossing(x, t, level):
    """First position where the samples ``t`` cross ``level`` (linear interpolation)."""
    for i in range(len(t) - 1):
        if (t[i] - level) * (t[i + 1] - level) <= 0 and t[i] != t[i + 1]:
            return x[i] + (level - t[i]) / (t[i + 1] - t[i]) * (x[i + 1] - x[i])
    return None


def transition_width(frame: ImageFrame, mask, phase, lo=0.2, hi=0.8) -> float:
    """Mean 20%-80% distance of level transitions across phase edges (mm)."""
    counts = np.asarray(frame.counts, dtype=float)
    widths = []
    for axis, line, a, b in _edge_segments(mask, phase):
        prof = _line(counts, axis, line)[a : b + 1]
        step = prof[-1] - prof[0]
        if step == 0:
            continue
        t = (prof - prof[0]) / step
        x = np.arange(a, b + 1) * frame.pixel_pitch
        x_lo, x_hi = _crossing(x, t, lo), _crossing(x, t, hi)
        if x_lo is not None and x_hi is not None:
            widths.append(abs(x_hi - x_lo))
    return float(np.mean(widths)) if widths else float("nan")


@dataclass
class DipReport:
    width_mm: float
    widths: list
    max_residual_depth: float
    interior_flatness: float


def edge_dip_report(frame: ImageFrame, reference: ImageFrame, pattern: PhasePattern,
                    telescope: TelescopeConfig, margin_mm: float | None = None) -> DipReport:
    """Dark bands at phase edges of ``frame`` normalised by ``reference``.

    ``reference`` is normally the matching background frame, so that the
    source envelope divides out.  Widths are full widths at half depth.
    """
    mask, phase = interior_mask(frame, pattern, telescope, margin_mm)
    ref = np.asarray(reference.counts, dtype=float)
    ratio = np.divide(np.asarray(frame.counts, dtype=float), ref, out=np.zeros_like(ref), where=ref > 0)
    widths, depths = [], []
    for axis, line, a, b in _edge_segments(mask, phase):
        prof = _line(ratio, axis, line)[a : b + 1]
        x = np.arange(a, b + 1) * frame.pixel_pitch
        k = int(np.argmin(prof))
        base = 0.5 * (prof[0] + prof[-1])
        half = 0.5 * (base + prof[k])
        left = _crossing(x[: k + 1][::-1], prof[: k + 1][::-1], half)
        right = _crossing(x[k:], prof[k:], half)
        depths.append(prof[k] / base)
        if left is not None and right is not None:
            widths.append(right - left)
    interior = ratio[mask]
    flat = float(interior.std() / interior.mean()) if interior.size else float("nan")
    return DipReport(float(np.mean(widths)) if widths else float("nan"), widths,
                     float(max(depths)) if depths else float("nan"), flat)


@dataclass
class InversionReport:
    sum_deviation: float
    sum_deviation_rel: float
    correlation: float
    n_pixels: int


def inversion_check(frame_a: ImageFrame, frame_b: ImageFrame, pattern: PhasePattern | None = None,
                    telescope: TelescopeConfig | None = None, margin_mm: float | None = None) -> InversionReport:
    """Flatness of ``A + B`` and Pearson correlation of ``A`` with ``B`` over interior pixels."""
    if frame_a.shape != frame_b.shape or not np.isclose(frame_a.pixel_pitch, frame_b.pixel_pitch):
        raise ValueError("frames differ in geometry")
    if pattern is not None:
        if telescope is None:
            raise ValueError("telescope config needed to map the pattern onto the frame")
        mask, _ = interior_mask(frame_a, pattern, telescope, margin_mm)
    else:
        mask = np.ones(frame_a.shape, dtype=bool)
    a = np.asarray(frame_a.counts, dtype=float)[mask]
    b = np.asarray(frame_b.counts, dtype=float)[mask]
    total = a + b
    dev = float(np.max(np.abs(total - total.mean()))) if total.size else float("nan")
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
    rel = dev / scale if scale > 0 else 0.0
    if a.std() == 0 or b.std() == 0:
        corr = 1.0 if np.array_equal(a, b) else float("nan")
    else:
        corr = float(np.corrcoef(a, b)[0, 1])
    return InversionReport(dev, rel, corr, int(mask.sum()))
