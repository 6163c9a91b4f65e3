"""Telescope imaging of the conditional photon-2 amplitude.

The three-lens chain is reduced to a demagnification, an image inversion and
a diffraction-limited point-spread function.  The default PSF is a Gaussian
amplitude kernel whose intensity FWHM equals ``resolution_fwhm`` and whose
support is a disc of radius ``resolution_fwhm``; beyond one FWHM from a phase
edge the coherent image therefore carries no trace of the edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import signal, special

from .detection import ImageFrame
from .pattern import PhasePattern, phase_at
from .spatial import Photon1Mode

DIRECT_MAX_CELLS = 15
_AIRY_HALF_MAX_V = 1.616339948
_AIRY_THIRD_ZERO = 10.17346814


@dataclass(frozen=True)
class TelescopeConfig:
    demag: float = 0.52
    invert: bool = True
    resolution_fwhm: float = 0.3
    aperture_diameter: float = 50.0
    coherent: bool = True
    psf: str = "gaussian"
    # lens chain, documentation only (focal lengths and L1 distance in mm)
    focal_lengths_mm: tuple = (400.0, 100.0, 1000.0)
    l1_distance_mm: float = 15240.0
    camera_distance_mm: float = 16910.0

    def __post_init__(self):
        if not self.demag > 0:
            raise ValueError("telescope.demag must be > 0")
        if not self.resolution_fwhm > 0:
            raise ValueError("telescope.resolution_fwhm must be > 0")
        if self.psf not in ("gaussian", "airy"):
            raise ValueError(f"telescope.psf must be 'gaussian' or 'airy', got {self.psf!r}")


@dataclass
class ComplexField:
    grid: np.ndarray
    pitch: float
    origin: tuple = (0.0, 0.0)
    plane: str = "object"

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=complex)
        if self.grid.ndim != 2:
            raise ValueError("field grid must be 2-D")
        if not self.pitch > 0:
            raise ValueError("field pitch must be > 0")
        if not np.all(np.isfinite(self.grid)):
            raise ValueError("field contains non-finite values")

    @property
    def shape(self):
        return self.grid.shape

    def coords(self):
        ny, nx = self.grid.shape
        x = self.origin[0] + (np.arange(nx) - (nx - 1) / 2) * self.pitch
        y = self.origin[1] + (np.arange(ny) - (ny - 1) / 2) * self.pitch
        return x, y

    def mesh(self):
        x, y = self.coords()
        return np.meshgrid(x, y)

    @classmethod
    def on_grid(cls, values, pitch, origin=(0.0, 0.0), plane="object"):
        return cls(np.asarray(values, dtype=complex), pitch, origin, plane)


def sampling_grid(field_mm: float, pitch: float, origin=(0.0, 0.0)) -> ComplexField:
    """Square grid of ones covering ``field_mm`` (rounded to whole cells)."""
    n = max(1, int(round(field_mm / pitch)))
    return ComplexField(np.ones((n, n)), pitch, origin)


def kernel_radius_cells(cfg: TelescopeConfig, pitch: float) -> int:
    if cfg.psf == "airy":
        r_mm = _AIRY_THIRD_ZERO / _AIRY_HALF_MAX_V / 2 * cfg.resolution_fwhm
    else:
        r_mm = cfg.resolution_fwhm
    return int(np.floor(r_mm / pitch + 1e-9))


def coherent_psf(cfg: TelescopeConfig, pitch: float) -> ComplexField:
    """Amplitude PSF sampled at ``pitch`` (object plane), normalised to unit sum."""
    if not pitch < cfg.resolution_fwhm / 3:
        raise ValueError(
            f"grid pitch {pitch} mm undersamples the {cfg.resolution_fwhm} mm PSF; "
            f"use a pitch below {cfg.resolution_fwhm / 3:.6g} mm"
        )
    R = kernel_radius_cells(cfg, pitch)
    o = np.arange(-R, R + 1) * pitch
    X, Y = np.meshgrid(o, o)
    r = np.hypot(X, Y)
    if cfg.psf == "gaussian":
        s_amp = cfg.resolution_fwhm / (2.0 * np.sqrt(np.log(2.0)))
        k = np.exp(-0.5 * (r / s_amp) ** 2)
    else:
        v = 2.0 * _AIRY_HALF_MAX_V * r / cfg.resolution_fwhm
        k = np.ones_like(v)
        nz = v > 0
        k[nz] = 2.0 * special.j1(v[nz]) / v[nz]
    k[r > R * pitch * (1 + 1e-12)] = 0.0
    return ComplexField(k / k.sum(), pitch, plane="psf")


def convolve_same(values: np.ndarray, kernel: np.ndarray, method: str = "auto", pad: str = "edge") -> np.ndarray:
    """Centred convolution.

    ``pad='edge'`` replicates border values (the field continues beyond the
    grid); ``pad='zero'`` truncates the field at the grid.  ``auto`` uses
    direct summation up to 15x15 kernels and FFT above.
    """
    R = kernel.shape[0] // 2
    if method == "auto":
        method = "direct" if kernel.shape[0] <= DIRECT_MAX_CELLS else "fft"
    if pad == "edge":
        padded = np.pad(values, R, mode="edge")
    elif pad == "zero":
        padded = np.pad(values, R, mode="constant")
    else:
        raise ValueError(f"pad must be 'edge' or 'zero', got {pad!r}")
    return signal.convolve(padded, kernel, mode="valid", method=method)


def conditional_amplitude_map(phase, response: Callable, envelope: ComplexField) -> ComplexField:
    """Photon-2 amplitude ``response(phi) * sqrt(envelope)`` on the envelope's grid.

    ``phase`` is either a :class:`PhasePattern` (sampled at the grid centres)
    or an array of phases with the envelope's shape.
    """
    if isinstance(phase, PhasePattern):
        X, Y = envelope.mesh()
        phi = phase_at(phase, X, Y)
    else:
        phi = np.asarray(phase, dtype=float)
        if phi.shape != envelope.shape:
            raise ValueError(f"phase map shape {phi.shape} does not match envelope grid {envelope.shape}")
    env = envelope.grid.real
    if np.any(env < 0):
        raise ValueError("envelope must be non-negative")
    return ComplexField(response(phi) * np.sqrt(env), envelope.pitch, envelope.origin, envelope.plane)


def intensity_psf(kernel: np.ndarray) -> np.ndarray:
    ipsf = np.abs(kernel) ** 2
    return ipsf / ipsf.sum()


def coherent_image(field: ComplexField, cfg: TelescopeConfig, method: str = "auto", pad: str = "edge") -> np.ndarray:
    """Object-plane intensity seen through the telescope pupil (no geometry change)."""
    kern = coherent_psf(cfg, field.pitch).grid
    if cfg.coherent:
        return np.abs(convolve_same(field.grid, kern, method, pad)) ** 2
    return convolve_same(np.abs(field.grid) ** 2, intensity_psf(kern), method, pad).real


def to_camera(intensity: np.ndarray, pitch: float, origin, cfg: TelescopeConfig, binning: int = 1,
              exposure_s: float = 0.0, metadata=None) -> ImageFrame:
    """Map an object-plane image onto the camera: scale, invert, bin."""
    img = np.asarray(intensity)
    if cfg.invert:
        img = img[::-1, ::-1]
        cam_origin = (-cfg.demag * origin[0], -cfg.demag * origin[1])
    else:
        cam_origin = (cfg.demag * origin[0], cfg.demag * origin[1])
    if binning > 1:
        ny, nx = img.shape
        if ny % binning or nx % binning:
            raise ValueError(f"grid {img.shape} is not divisible by binning {binning}")
        img = img.reshape(ny // binning, binning, nx // binning, binning).sum(axis=(1, 3))
    meta = dict(metadata or {})
    meta.setdefault("binning", binning)
    return ImageFrame(img, pitch * cfg.demag * binning, exposure_s, cam_origin, metadata=meta)


def image_through_telescope(field: ComplexField, cfg: TelescopeConfig, binning: int = 1,
                            method: str = "auto", pad: str = "edge") -> ImageFrame:
    """Camera-plane intensity of ``field``.

    Coherent mode blurs the amplitude and takes the modulus; incoherent mode
    blurs ``|field|^2`` with the intensity PSF.  A point at object ``(x, y)``
    lands at ``(-demag x, -demag y)`` when ``invert`` is set.
    """
    inten = coherent_image(field, cfg, method, pad)
    return to_camera(inten, field.pitch, field.origin, cfg, binning,
                     metadata={"imaging": "coherent" if cfg.coherent else "incoherent"})


def camera_to_object(x_cam, y_cam, cfg: TelescopeConfig):
    s = -1.0 / cfg.demag if cfg.invert else 1.0 / cfg.demag
    return np.asarray(x_cam) * s, np.asarray(y_cam) * s


def object_to_camera(x, y, cfg: TelescopeConfig):
    s = -cfg.demag if cfg.invert else cfg.demag
    return np.asarray(x) * s, np.asarray(y) * s


def photon1_acceptance(mode: Photon1Mode, x1, y1) -> np.ndarray:
    """Detection weight of photon 1 at ``(x1, y1)``.

    Behind lens L_o the detector sits at the focus on axis, so acceptance
    does not depend on where photon 1 crossed the lens plane: the weight is
    the constant 1.  A bare detector accepts only inside its aperture.
    """
    x1 = np.asarray(x1, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    w = np.ones(np.broadcast(x1, y1).shape)
    for axis, coord in (("x", x1), ("y", y1)):
        b = mode.bounds(axis)
        if b is not None:
            w = w * ((coord >= b[0]) & (coord <= b[1]))
    return w


def photon1_superposition_acceptance() -> float:
    """Constant photon-1 weight in lens (superposition) mode."""
    return 1.0
