"""Experiment orchestration: imaging, CHSH, polariser fringes and slit scans.

Two backends share one physics path.  ``analytic`` evaluates expected counts
on the object grid; ``montecarlo`` samples pairs, draws polarisation
outcomes from the local pattern phase and bins photon-2 hits.  Per-photon
coherent propagation cannot be sampled, so the Monte Carlo path jitters each
hit by the amplitude PSF (used as a probability kernel) and then keeps it with
probability ``|K * a|^2 / (K * |a|^2)``.  That ratio is at most one
(Cauchy-Schwarz with a non-negative unit-sum kernel) and turns the jittered
density into the coherent image exactly.

Randomness comes from ``SeedSequence(seed, spawn_key=(stream, chunk))``; the
work is cut into fixed-size chunks, so results do not depend on how many
workers process them.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import detection, optics, spatial
from .analysis import CHSHReport, CorrelationTable, LinearFit, chsh_S, linear_fit
from .detection import DetectorConfig, ImageFrame
from .optics import ComplexField, TelescopeConfig
from .pattern import PhasePattern, generate_checkerboard, generate_uniform, phase_at
from .polarization import bell_state, conditional_phase_response, polarizer_vector, projection_probability
from .spatial import Photon1Mode, SourceParams

log = logging.getLogger(__name__)

PSI_MINUS = bell_state("psi_minus")

# default CHSH analyser angles (delta1, delta1', delta2, delta2') in degrees
CHSH_ANGLES = (45.0, 0.0, 67.5, 22.5)

_STREAM_RAW, _STREAM_BG, _STREAM_RAW_NOISE, _STREAM_BG_NOISE = 1, 2, 3, 4
_STREAM_CHSH, _STREAM_FRINGE, _STREAM_SLIT = 100, 200, 300


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class MeasurementSetting:
    """Polariser angles (degrees, ``None`` = polariser removed) and photon-1 detection."""

    delta1: Optional[float] = -45.0
    delta2: Optional[float] = -45.0
    photon1_mode: Photon1Mode = field(default_factory=Photon1Mode)
    gate: str = "coincidence"

    def __post_init__(self):
        if self.gate not in ("coincidence", "ungated"):
            raise ConfigError("setting.gate", f"expected 'coincidence' or 'ungated', got {self.gate!r}")

    def photon1_outcomes(self):
        if self.gate == "coincidence" and self.delta1 is not None:
            return [float(self.delta1)]
        base = 0.0 if self.delta1 is None else float(self.delta1)
        return [base, base + 90.0]

    def photon2_outcomes(self):
        return [float(self.delta2)] if self.delta2 is not None else [0.0, 90.0]

    def spatial_mode(self) -> Photon1Mode:
        return Photon1Mode() if self.gate == "ungated" else self.photon1_mode


@dataclass(frozen=True)
class GridConfig:
    """Object-plane sampling.  ``field_mm`` defaults to the pattern plus a margin on each side."""

    pitch_mm: float = 0.05
    field_mm: Optional[float] = None
    margin_mm: float = 0.5
    binning: int = 1

    def __post_init__(self):
        if not self.pitch_mm > 0:
            raise ConfigError("grid.pitch_mm", "must be > 0")
        if self.binning < 1:
            raise ConfigError("grid.binning", "must be >= 1")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "analytic"
    n_pairs: Optional[int] = None
    exposure_s: float = 600.0
    poisson: bool = False
    workers: int = 1
    chunk_size: int = 1 << 17

    def __post_init__(self):
        if self.kind not in ("analytic", "montecarlo"):
            raise ConfigError("backend.kind", f"expected 'analytic' or 'montecarlo', got {self.kind!r}")
        if self.n_pairs is not None and self.n_pairs < 0:
            raise ConfigError("backend.n_pairs", "must be >= 0")
        if not self.exposure_s >= 0:
            raise ConfigError("backend.exposure_s", "must be >= 0")
        if self.workers < 1:
            raise ConfigError("backend.workers", "must be >= 1")
        if self.chunk_size < 1:
            raise ConfigError("backend.chunk_size", "must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceParams = field(default_factory=SourceParams)
    pattern: PhasePattern = field(default_factory=generate_checkerboard)
    telescope: TelescopeConfig = field(default_factory=TelescopeConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    setting: MeasurementSetting = field(default_factory=MeasurementSetting)
    grid: GridConfig = field(default_factory=GridConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    d1_mm: float = 1247.0
    d2_mm: float = 890.0
    seed: Optional[int] = None
    pattern_source: str = "checkerboard(1.0, 4)"

    def __post_init__(self):
        if not self.d1_mm > 0:
            raise ConfigError("geometry.d1_m", "must be > 0")
        if not self.d2_mm > 0:
            raise ConfigError("geometry.d2_m", "must be > 0")

    @property
    def n_pairs(self) -> int:
        if self.backend.n_pairs is not None:
            return int(self.backend.n_pairs)
        return int(round(self.detector.pair_rate_hz * self.backend.exposure_s))

    def with_setting(self, **changes) -> "ExperimentConfig":
        return replace(self, setting=replace(self.setting, **changes))

    def with_backend(self, **changes) -> "ExperimentConfig":
        return replace(self, backend=replace(self.backend, **changes))

    def echo(self) -> dict:
        """JSON-safe description of the configuration (pattern summarised by hash)."""
        d = {
            "source": asdict(self.source),
            "telescope": asdict(self.telescope),
            "detector": asdict(self.detector),
            "setting": asdict(self.setting),
            "grid": asdict(self.grid),
            "backend": asdict(self.backend),
            "geometry": {"d1_mm": self.d1_mm, "d2_mm": self.d2_mm},
            "seed": self.seed,
            "pattern": {
                "source": self.pattern_source,
                "shape": list(self.pattern.shape),
                "pitch_mm": self.pattern.pitch,
                "origin_mm": list(self.pattern.origin),
                "sha256": hashlib.sha256(np.ascontiguousarray(self.pattern.grid).tobytes()).hexdigest(),
            },
        }
        d["backend"].pop("workers")
        return json.loads(json.dumps(d, default=float))

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


def _rng(seed: int, stream: int, chunk: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, chunk))))


def _chunks(n: int, size: int):
    return [(i, min(size, n - i * size)) for i in range((n + size - 1) // size)]


def _map_chunks(fn, chunks, workers: int):
    if workers == 1 or len(chunks) <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


# ------------------------------------------------------------------ grids

def object_grid(cfg: ExperimentConfig) -> ComplexField:
    g = cfg.grid
    if g.field_mm is None:
        x0, x1, y0, y1 = cfg.pattern.extent
        span = max(x1 - x0, y1 - y0) + 2 * g.margin_mm
    else:
        span = g.field_mm
    n = int(np.ceil(span / g.pitch_mm - 1e-9))
    n += (-n) % g.binning
    return ComplexField(np.ones((n, n)), g.pitch_mm, cfg.pattern.origin)


@dataclass
class _Maps:
    grid: ComplexField
    phi: np.ndarray
    density: np.ndarray
    combos: list


def _maps(cfg: ExperimentConfig, pattern: PhasePattern) -> _Maps:
    grid = object_grid(cfg)
    X, Y = grid.mesh()
    phi = phase_at(pattern, X, Y)
    density = spatial.photon2_pair_density(X, Y, cfg.setting.spatial_mode(), cfg.source, cfg.d1_mm, cfg.d2_mm)
    combos = [(o1, o2) for o1 in cfg.setting.photon1_outcomes() for o2 in cfg.setting.photon2_outcomes()]
    return _Maps(grid, phi, density, combos)


def _fields(maps: _Maps):
    """Amplitude maps: one per pure-state outcome combo, then the mixed-state H and V fields."""
    amp = np.sqrt(maps.density)
    out = [conditional_phase_response(o1, o2, PSI_MINUS)(maps.phi) * amp for o1, o2 in maps.combos]
    out.append(np.exp(1j * maps.phi) * amp)
    out.append(amp.astype(complex))
    return out


def _mixed_weights(combos):
    """Per combo ``(w_H, w_V)`` of the unpolarised component: 1/4 cos^2 or 1/4 sin^2 of delta2."""
    return [(0.25 * polarizer_vector(o2)[0] ** 2, 0.25 * polarizer_vector(o2)[1] ** 2) for _, o2 in combos]


def _image(values, cfg: ExperimentConfig, pitch) -> np.ndarray:
    return optics.coherent_image(ComplexField(values, pitch), cfg.telescope, pad="zero")


def signal_intensity(cfg: ExperimentConfig, pattern: PhasePattern | None = None) -> tuple:
    """Per-pair coincidence density (1/mm^2) on the object grid after the telescope PSF.

    Returns ``(intensity, maps)``.
    """
    maps = _maps(cfg, cfg.pattern if pattern is None else pattern)
    v = cfg.detector.visibility
    fields = _fields(maps)
    n = len(maps.combos)
    total = np.zeros(maps.phi.shape)
    pitch = maps.grid.pitch
    if v > 0:
        for f in fields[:n]:
            total += v * _image(f, cfg, pitch)
    if v < 1:
        img_h = _image(fields[n], cfg, pitch)
        img_v = _image(fields[n + 1], cfg, pitch)
        for w_h, w_v in _mixed_weights(maps.combos):
            total += (1 - v) * (w_h * img_h + w_v * img_v)
    return total, maps


# ---------------------------------------------------------------- imaging

@dataclass
class ImagingResult:
    raw: ImageFrame
    background: ImageFrame
    corrected: ImageFrame
    config_hash: str


def _reference_counts(cfg: ExperimentConfig, maps: _Maps, n_pairs: int) -> float:
    """Expected true coincidences at an unmodulated 1/2 polariser transmission."""
    return 0.5 * n_pairs * maps.grid.pitch**2 * float(maps.density.sum())


def _frame_metadata(cfg: ExperimentConfig, label: str, n_pairs: int) -> dict:
    s = cfg.setting
    return {
        "label": label,
        "backend": cfg.backend.kind,
        "seed": cfg.seed,
        "n_pairs": n_pairs,
        "setting": {"delta1": s.delta1, "delta2": s.delta2, "gate": s.gate, "photon1_mode": asdict(s.photon1_mode)},
        "visibility": cfg.detector.visibility,
        "config_sha256": cfg.config_hash(),
    }


def _analytic_frame(cfg: ExperimentConfig, pattern: PhasePattern, label: str, noise_stream: int) -> ImageFrame:
    n_pairs = cfg.n_pairs
    inten, maps = signal_intensity(cfg, pattern)
    exposure = cfg.backend.exposure_s
    signal = n_pairs * maps.grid.pitch**2 * inten
    frame = optics.to_camera(signal, maps.grid.pitch, maps.grid.origin, cfg.telescope, cfg.grid.binning,
                             exposure, _frame_metadata(cfg, label, n_pairs))
    acc = detection.accidental_rate_per_px(_reference_counts(cfg, maps, n_pairs), cfg.detector, frame.counts.size)
    extra = acc + cfg.detector.dark_rate_hz_per_px * exposure
    if cfg.backend.poisson:
        if cfg.seed is None:
            raise ConfigError("seed", "Poisson noise needs a seed")
        counts = _rng(cfg.seed, noise_stream).poisson(frame.counts + extra)
    else:
        counts = frame.counts + extra
    out = frame.with_counts(counts)
    out.metadata["accidentals_per_px"] = acc
    return out


def _mc_kernels(cfg: ExperimentConfig, pitch: float):
    k = optics.coherent_psf(cfg.telescope, pitch).grid.real
    if not cfg.telescope.coherent:
        return optics.intensity_psf(k), False
    if np.any(k < 0):
        raise ConfigError("telescope.psf", "the montecarlo backend needs a non-negative PSF (use 'gaussian')")
    return k, True


def _acceptance_maps(fields, kernel, cfg, pitch):
    """Keep-probability maps for the coherent correction, one per field."""
    out = []
    for f in fields:
        coh = _image(f, cfg, pitch)
        inc = optics.convolve_same(np.abs(f) ** 2, kernel, pad="zero").real
        w = np.divide(coh, inc, out=np.zeros_like(coh), where=inc > 0)
        out.append(np.clip(w, 0.0, 1.0))
    return np.stack(out)


def _mc_hits(cfg: ExperimentConfig, pattern: PhasePattern, stream: int):
    """Object-plane hit histogram from ``cfg.n_pairs`` sampled pairs."""
    if cfg.seed is None:
        raise ConfigError("seed", "the montecarlo backend needs an explicit seed")
    maps = _maps(cfg, pattern)
    ny, nx = maps.phi.shape
    pitch = maps.grid.pitch
    x_min = maps.grid.origin[0] - nx * pitch / 2
    y_min = maps.grid.origin[1] - ny * pitch / 2
    fields = _fields(maps)
    kernel, coherent = _mc_kernels(cfg, pitch)
    keep_maps = _acceptance_maps(fields, kernel, cfg, pitch) if coherent else None
    kflat = kernel.ravel() / kernel.sum()
    R = kernel.shape[0] // 2
    k_dy, k_dx = np.divmod(np.arange(kernel.size), kernel.shape[1])
    k_dy, k_dx = k_dy - R, k_dx - R
    responses = [conditional_phase_response(o1, o2, PSI_MINUS) for o1, o2 in maps.combos]
    pol1 = [polarizer_vector(o1) ** 2 for o1, _ in maps.combos]
    pol2 = [polarizer_vector(o2) ** 2 for _, o2 in maps.combos]
    n_combo = len(maps.combos)
    v = cfg.detector.visibility
    mode = cfg.setting.spatial_mode()
    src, d1, d2 = cfg.source, cfg.d1_mm, cfg.d2_mm

    def run(chunk):
        index, n = chunk
        rng = _rng(cfg.seed, stream, index)
        s = spatial.sample_pairs(src, d1, d2, n, rng)
        ok = optics.photon1_acceptance(mode, s.pos1[:, 0], s.pos1[:, 1]) > 0
        ix = np.floor((s.pos2[ok, 0] - x_min) / pitch).astype(np.int64)
        iy = np.floor((s.pos2[ok, 1] - y_min) / pitch).astype(np.int64)
        inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
        ix, iy = ix[inside], iy[inside]
        m = ix.size
        phi = maps.phi[iy, ix]
        pure = rng.random(m) < v
        u = rng.random(m)
        p1 = rng.integers(0, 2, m)
        p2 = rng.integers(0, 2, m)
        label = np.full(m, -1)
        cum = np.zeros(m)
        for c in range(n_combo):
            prob = np.where(pure, np.abs(responses[c](phi)) ** 2, pol1[c][p1] * pol2[c][p2])
            hit = (label < 0) & (u < cum + prob)
            label[hit] = np.where(pure[hit], c, n_combo + p2[hit])
            cum += prob
        sel = label >= 0
        ix, iy, label = ix[sel], iy[sel], label[sel]
        off = rng.choice(kflat.size, size=ix.size, p=kflat)
        tx, ty = ix + k_dx[off], iy + k_dy[off]
        inside = (tx >= 0) & (tx < nx) & (ty >= 0) & (ty < ny)
        tx, ty, label = tx[inside], ty[inside], label[inside]
        if coherent:
            keep = rng.random(tx.size) < keep_maps[label, ty, tx]
            tx, ty = tx[keep], ty[keep]
        return np.bincount(ty * nx + tx, minlength=nx * ny).reshape(ny, nx)

    parts = _map_chunks(run, _chunks(cfg.n_pairs, cfg.backend.chunk_size), cfg.backend.workers)
    hits = np.zeros((ny, nx), dtype=np.int64)
    for p in parts:
        hits += p
    return hits, maps


def _mc_frame(cfg: ExperimentConfig, pattern: PhasePattern, label: str, stream: int, noise_stream: int) -> ImageFrame:
    n_pairs = cfg.n_pairs
    hits, maps = _mc_hits(cfg, pattern, stream)
    exposure = cfg.backend.exposure_s
    frame = optics.to_camera(hits, maps.grid.pitch, maps.grid.origin, cfg.telescope, cfg.grid.binning,
                             exposure, _frame_metadata(cfg, label, n_pairs))
    acc = detection.accidental_rate_per_px(_reference_counts(cfg, maps, n_pairs), cfg.detector, frame.counts.size)
    out = detection.add_uniform_counts(frame, acc + cfg.detector.dark_rate_hz_per_px * exposure,
                                       _rng(cfg.seed, noise_stream))
    out.metadata["accidentals_per_px"] = acc
    return out


def background_pattern(pattern: PhasePattern) -> PhasePattern:
    return generate_uniform(pattern.shape, pattern.pitch, 0.0, pattern.origin)


def capture_frame(cfg: ExperimentConfig, pattern: PhasePattern | None = None, background: bool = False) -> ImageFrame:
    pattern = cfg.pattern if pattern is None else pattern
    if background:
        pattern = background_pattern(pattern)
    label = "background" if background else "raw"
    streams = (_STREAM_BG, _STREAM_BG_NOISE) if background else (_STREAM_RAW, _STREAM_RAW_NOISE)
    if cfg.backend.kind == "analytic":
        return _analytic_frame(cfg, pattern, label, streams[1])
    return _mc_frame(cfg, pattern, label, *streams)


def capture_background(cfg: ExperimentConfig) -> ImageFrame:
    """Same setting and exposure with a uniform phi = 0 pattern on the modulator."""
    return capture_frame(cfg, background=True)


def run_imaging(cfg: ExperimentConfig) -> ImagingResult:
    raw = capture_frame(cfg)
    bg = capture_background(cfg)
    corrected = detection.subtract_background(raw, bg)
    corrected.metadata["label"] = "corrected"
    return ImagingResult(raw, bg, corrected, cfg.config_hash())


# ------------------------------------------------------------------- CHSH

def coincidence_probability(d1: float, d2: float, v: float) -> float:
    return float(detection.apply_visibility(projection_probability(PSI_MINUS, d1, d2), v))


def run_chsh(cfg: ExperimentConfig, angles=CHSH_ANGLES) -> CHSHReport:
    """Measure the 16 coincidence counts and evaluate S.

    ``angles`` is ``(delta1, delta1', delta2, delta2')``.  The pair budget
    ``cfg.n_pairs`` is split evenly over the four analyser pairs.
    """
    d1, d1p, d2, d2p = (float(a) for a in angles)
    v = cfg.detector.visibility
    per_pair = cfg.n_pairs // 4
    table = CorrelationTable()
    for k, (a, b) in enumerate([(d1, d2), (d1p, d2), (d1, d2p), (d1p, d2p)]):
        settings = [(a, b), (a + 90, b + 90), (a, b + 90), (a + 90, b)]
        probs = np.array([coincidence_probability(x, y, v) for x, y in settings])
        if cfg.backend.kind == "analytic":
            counts = per_pair * probs
        else:
            if cfg.seed is None:
                raise ConfigError("seed", "the montecarlo backend needs an explicit seed")
            probs = probs / probs.sum()

            def draw(chunk, _k=k, _p=probs):
                index, n = chunk
                return _rng(cfg.seed, _STREAM_CHSH + _k, index).multinomial(n, _p)

            parts = _map_chunks(draw, _chunks(per_pair, cfg.backend.chunk_size), cfg.backend.workers)
            counts = np.sum(parts, axis=0) if parts else np.zeros(4)
        for (x, y), c in zip(settings, counts):
            table.add(x, y, float(c))
    return chsh_S(table, d1, d1p, d2, d2p)


# ----------------------------------------------------------------- fringe

@dataclass
class FringeScan:
    delta2: float
    delta1: np.ndarray
    counts: np.ndarray
    rate: np.ndarray


def run_fringe_scan(cfg: ExperimentConfig, delta2: float, delta1_sweep) -> FringeScan:
    """Coincidence counts versus photon-1 polariser angle, ``cfg.n_pairs`` pairs per point."""
    v = cfg.detector.visibility
    d1s = np.asarray(list(delta1_sweep), dtype=float)
    probs = np.array([coincidence_probability(d, delta2, v) for d in d1s])
    n = cfg.n_pairs
    if cfg.backend.kind == "analytic":
        counts = n * probs
    else:
        if cfg.seed is None:
            raise ConfigError("seed", "the montecarlo backend needs an explicit seed")
        counts = np.empty(d1s.size)
        for i, p in enumerate(probs):
            def draw(chunk, _i=i, _p=p):
                index, m = chunk
                return _rng(cfg.seed, _STREAM_FRINGE + _i, index).binomial(m, _p)
            counts[i] = sum(_map_chunks(draw, _chunks(n, cfg.backend.chunk_size), cfg.backend.workers))
    exposure = cfg.backend.exposure_s
    rate = counts / exposure if exposure > 0 else np.full(d1s.size, np.nan)
    return FringeScan(float(delta2), d1s, np.asarray(counts, dtype=float), rate)


# -------------------------------------------------------------- slit scan

@dataclass
class SlitScan:
    orientation: str
    positions: np.ndarray
    mean_photon1: np.ndarray
    mean_camera: np.ndarray
    stderr_camera: np.ndarray
    accepted: np.ndarray
    fit: LinearFit


def run_slit_scan(cfg: ExperimentConfig, orientation: str, positions, slit_width_mm: float = 0.8) -> SlitScan:
    """Mean photon-2 camera position for each photon-1 slit position.

    A ``horizontal`` slit is displaced vertically and measures y; a
    ``vertical`` slit measures x.  Polarisers are out, photon 1 is collected
    behind the slit.  Photon 2 is mapped through the telescope geometry and
    blurred by the intensity PSF.  ``cfg.n_pairs`` pairs are sampled per slit
    position.
    """
    if orientation not in ("horizontal", "vertical"):
        raise ConfigError("slit.orientation", f"expected 'horizontal' or 'vertical', got {orientation!r}")
    if cfg.seed is None:
        raise ConfigError("seed", "slit scans are Monte Carlo and need an explicit seed")
    axis = 1 if orientation == "horizontal" else 0
    pos = np.asarray(list(positions), dtype=float)
    tel = cfg.telescope
    blur = tel.resolution_fwhm / (2 * np.sqrt(2 * np.log(2)))
    sign = -1.0 if tel.invert else 1.0
    means1, means2, errs, acc = [], [], [], []
    for i, c in enumerate(pos):
        x0, y0 = (c, 0.0) if axis == 0 else (0.0, c)
        mode = Photon1Mode("point", x0, y0, slit_width_mm, slit=orientation)

        def run(chunk, _i=i, _mode=mode):
            index, n = chunk
            rng = _rng(cfg.seed, _STREAM_SLIT + _i, index)
            s = spatial.sample_pairs(cfg.source, cfg.d1_mm, cfg.d2_mm, n, rng)
            ok = optics.photon1_acceptance(_mode, s.pos1[:, 0], s.pos1[:, 1]) > 0
            obj = s.pos2[ok, axis] + rng.normal(0.0, blur, int(ok.sum()))
            cam = sign * tel.demag * obj
            return s.pos1[ok, axis].sum(), cam.sum(), (cam**2).sum(), int(ok.sum())

        parts = _map_chunks(run, _chunks(cfg.n_pairs, cfg.backend.chunk_size), cfg.backend.workers)
        s1 = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        q2 = sum(p[2] for p in parts)
        n = sum(p[3] for p in parts)
        if n == 0:
            means1.append(np.nan), means2.append(np.nan), errs.append(np.nan), acc.append(0)
            continue
        m2 = s2 / n
        var = max(q2 / n - m2**2, 0.0)
        means1.append(s1 / n), means2.append(m2), errs.append(np.sqrt(var / n)), acc.append(n)
    means2 = np.array(means2)
    good = np.isfinite(means2)
    fit = linear_fit(pos[good], means2[good])
    return SlitScan(orientation, pos, np.array(means1), means2, np.array(errs), np.array(acc), fit)
