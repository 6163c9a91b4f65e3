"""Transparent polarisation-sensitive phase patterns.

A pattern is a grid of phase shifts (radians) applied to the H component of
photon 2.  Array row ``i`` runs along +y and column ``j`` along +x; files
(PGM and CSV) are stored top row first, i.e. flipped vertically with respect
to the array.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import pnm


@dataclass(frozen=True)
class PhasePattern:
    grid: np.ndarray
    pitch: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        if grid.ndim != 2 or grid.size == 0:
            raise ValueError("pattern grid must be a non-empty 2-D array")
        if not np.all(np.isfinite(grid)):
            raise ValueError("pattern phases must be finite")
        if not self.pitch > 0:
            raise ValueError(f"pattern pitch must be > 0, got {self.pitch!r}")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self):
        return self.grid.shape

    @property
    def extent(self):
        """``(x_min, x_max, y_min, y_max)`` in mm."""
        ny, nx = self.grid.shape
        x0, y0 = self.origin
        hx, hy = nx * self.pitch / 2, ny * self.pitch / 2
        return (x0 - hx, x0 + hx, y0 - hy, y0 + hy)

    def is_binary(self) -> bool:
        return bool(np.all((self.grid == 0.0) | (self.grid == np.pi)))


def phase_at(p: PhasePattern, x, y):
    """Nearest-cell phase lookup; cells own ``[lo, lo + pitch)`` on both axes.

    Points outside the pattern see zero phase.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x_min, _, y_min, _ = p.extent
    ny, nx = p.grid.shape
    ix = np.floor((x - x_min) / p.pitch).astype(np.int64)
    iy = np.floor((y - y_min) / p.pitch).astype(np.int64)
    inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    out = np.zeros(np.broadcast(x, y).shape)
    ix_b, iy_b, inside_b = np.broadcast_arrays(ix, iy, inside)
    out[inside_b] = p.grid[iy_b[inside_b], ix_b[inside_b]]
    return out if out.ndim else float(out)


def generate_checkerboard(square_mm: float = 1.0, n_squares: int = 4) -> PhasePattern:
    """Alternating 0/pi squares; the lower-left square carries pi."""
    if not square_mm > 0:
        raise ValueError("square_mm must be > 0")
    if n_squares < 1:
        raise ValueError("n_squares must be >= 1")
    i, j = np.indices((n_squares, n_squares))
    grid = np.where((i + j) % 2 == 0, np.pi, 0.0)
    return PhasePattern(grid, square_mm)


def generate_uniform(shape, pitch: float, phi: float = 0.0, origin=(0.0, 0.0)) -> PhasePattern:
    return PhasePattern(np.full(shape, float(phi)), pitch, origin)


def generate_cross(size_mm: float = 4.0, arm_mm: float = 1.0, pitch: float = 0.25) -> PhasePattern:
    """A pi-phase cross on a zero background: a simple irregular two-level test object."""
    n = int(round(size_mm / pitch))
    c = (np.arange(n) + 0.5) * pitch - size_mm / 2
    X, Y = np.meshgrid(c, c)
    arm = (np.abs(X) < arm_mm / 2) | (np.abs(Y) < arm_mm / 2)
    return PhasePattern(np.where(arm, np.pi, 0.0), pitch)


def gray_to_phase(gray, mapping: str = "binary", threshold: int = 128, maxval: int = 255) -> np.ndarray:
    gray = np.asarray(gray)
    if mapping == "binary":
        return np.where(gray >= threshold, np.pi, 0.0)
    if mapping == "linear":
        return np.pi * gray.astype(float) / maxval
    raise ValueError(f"unknown gray mapping {mapping!r}; expected 'binary' or 'linear'")


def load_pattern(source, pitch_mm: float, mapping: str = "binary", threshold: int = 128,
                 origin=(0.0, 0.0)) -> PhasePattern:
    """Build a pattern from a PGM/CSV file or an in-memory 8-bit raster.

    CSV files hold phases in radians and ignore ``mapping``.
    """
    if not pitch_mm > 0:
        raise ValueError(f"pitch_mm must be > 0, got {pitch_mm!r}")
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        if path.suffix.lower() == ".csv":
            rows = np.loadtxt(path, delimiter=",", ndmin=2)
            return PhasePattern(np.flipud(rows), pitch_mm, origin)
        with open(path, "rb") as fh:
            buf = fh.read()
        raster = pnm.parse_pgm(buf, path=os.fspath(path))
        maxval = _pgm_maxval(buf)
    else:
        raster = np.asarray(source)
        maxval = 255
    if raster.ndim != 2 or raster.size == 0:
        raise ValueError("raster must be a non-empty 2-D array")
    grid = gray_to_phase(raster, mapping, threshold, maxval)
    return PhasePattern(np.flipud(grid), pitch_mm, origin)


def _pgm_maxval(buf: bytes) -> int:
    pos = 2
    for _ in range(3):
        value, pos = pnm._read_int(buf, pos, "header field")
    return value


def save_pattern(p: PhasePattern, path) -> None:
    """Write ``.pgm`` (phase 0..pi -> gray 0..255) or ``.csv`` (radians)."""
    path = Path(path)
    rows = np.flipud(p.grid)
    if path.suffix.lower() == ".csv":
        np.savetxt(path, rows, delimiter=",", fmt="%.17g")
        return
    if rows.min() < 0 or rows.max() > np.pi:
        raise ValueError("PGM export needs phases within [0, pi]; use CSV for other values")
    pnm.write_pgm(path, np.rint(rows / np.pi * 255).astype(np.int64), maxval=255)
