"""Momentum-entangled spatial part of the photon pair.

Units: positions in mm, wavevectors in rad/mm.  Photon 1 travels towards
``z = -d1`` and photon 2 towards ``z = +d2``; both planes share the lab
transverse axes, so anti-correlated transverse momenta put the two photons at
equal and opposite positions when ``d1 == d2``.

Per transverse axis the sampling law is

* birth position ``b ~ N(0, sigma / sqrt(2))`` (|psi|^2 of the Gaussian source),
* momentum sum ``q = k1 + k2 ~ N(0, 1 / (sqrt(2) sigma))`` (|Phi_12|^2),
* relative momentum ``u ~ N(0, k * envelope_sigma)`` (direction envelopes),

with ``k1 = q/2 + u`` and ``k2 = q/2 - u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, special


@dataclass(frozen=True)
class SourceParams:
    # sigma defaults are assumptions; the source size is not quoted for the experiment
    sigma_x: float = 0.1
    sigma_y: float = 0.1
    sigma_z: float = 0.1
    lambda_photon: float = 810.0
    lambda_pump: float = 405.0
    mean_axis_angle: float = 0.0
    envelope_sigma: float = 0.0025

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y", "sigma_z", "lambda_photon", "lambda_pump", "envelope_sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"source.{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def k(self) -> float:
        """Photon wavenumber 2*pi/lambda in rad/mm."""
        return 2.0 * np.pi / (self.lambda_photon * 1e-6)

    def sigma(self, axis: str) -> float:
        return {"x": self.sigma_x, "y": self.sigma_y, "z": self.sigma_z}[axis]


@dataclass(frozen=True)
class Photon1Mode:
    """How photon 1 is detected.

    ``superposition`` is the lens-L_o measurement (acceptance independent of
    position).  ``point`` is a bare detector behind a square aperture of side
    ``aperture_mm`` centred on ``(x0, y0)``; with ``slit`` set the aperture is
    a slit of width ``aperture_mm`` and unbounded length.  A ``horizontal``
    slit measures y, a ``vertical`` slit measures x.
    """

    kind: str = "superposition"
    x0: float = 0.0
    y0: float = 0.0
    aperture_mm: float = 0.1
    slit: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("superposition", "point"):
            raise ValueError(f"photon1 mode must be 'superposition' or 'point', got {self.kind!r}")
        if self.slit not in (None, "horizontal", "vertical"):
            raise ValueError(f"slit must be 'horizontal', 'vertical' or None, got {self.slit!r}")
        if self.kind == "point" and not self.aperture_mm >= 0:
            raise ValueError("aperture_mm must be >= 0")

    def bounds(self, axis: str) -> Optional[tuple]:
        """Accepted interval of photon-1 position along ``axis`` or None if unbounded."""
        if self.kind == "superposition":
            return None
        if self.slit == "horizontal" and axis == "x":
            return None
        if self.slit == "vertical" and axis == "y":
            return None
        c = self.x0 if axis == "x" else self.y0
        return (c - self.aperture_mm / 2, c + self.aperture_mm / 2)


@dataclass
class PhotonPairSample:
    """A batch of sampled pairs; every field has leading dimension n."""

    birth: np.ndarray
    k1_t: np.ndarray
    k2_t: np.ndarray
    pos1: np.ndarray
    pos2: np.ndarray
    d1: float = field(default=0.0)
    d2: float = field(default=0.0)

    def __len__(self):
        return self.birth.shape[0]


def pair_amplitude(k1, k2, src: SourceParams) -> float:
    """Modulus of the pair amplitude for wavevectors ``k1``, ``k2`` (rad/mm).

    The pure phase and the ``1/(r_a r_b)`` factor are dropped.
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    k = src.k
    for name, vec in (("k1", k1), ("k2", k2)):
        mag = np.linalg.norm(vec)
        if abs(mag - k) > 1e-9 * k:
            raise ValueError(f"|{name}| = {mag!r} rad/mm is not the photon wavenumber {k!r}")
    s = k1 + k2
    sig = np.array([src.sigma_x, src.sigma_y, src.sigma_z])
    return float(np.exp(-0.5 * np.sum((s * sig) ** 2)))


def _axis_widths(src: SourceParams, axis: str):
    sig = src.sigma(axis)
    s_b2 = sig**2 / 2.0
    s_q2 = 1.0 / (2.0 * sig**2)
    s_u2 = (src.k * src.envelope_sigma) ** 2
    return s_b2, s_q2, s_u2


def position_covariance(src: SourceParams, d1: float, d2: float, axis: str = "x") -> np.ndarray:
    """Paraxial covariance of ``(x1, x2)`` implied by the sampling law."""
    s_b2, s_q2, s_u2 = _axis_widths(src, axis)
    a1 = d1 / src.k
    a2 = d2 / src.k
    var1 = s_b2 + a1**2 * (s_q2 / 4 + s_u2)
    var2 = s_b2 + a2**2 * (s_q2 / 4 + s_u2)
    cov = s_b2 + a1 * a2 * (s_q2 / 4 - s_u2)
    return np.array([[var1, cov], [cov, var2]])


def sample_pairs(src: SourceParams, d1: float, d2: float, n: int, rng: np.random.Generator) -> PhotonPairSample:
    if not (d1 > 0 and d2 > 0):
        raise ValueError("propagation distances must be > 0")
    k = src.k
    sig_t = np.array([src.sigma_x, src.sigma_y])
    birth = np.empty((n, 3))
    birth[:, :2] = rng.normal(0.0, 1.0, (n, 2)) * (sig_t / np.sqrt(2.0))
    birth[:, 2] = rng.normal(0.0, src.sigma_z / np.sqrt(2.0), n)
    q = rng.normal(0.0, 1.0, (n, 2)) / (np.sqrt(2.0) * sig_t)
    u = rng.normal(0.0, k * src.envelope_sigma, (n, 2))
    k1_t = q / 2 + u
    k2_t = q / 2 - u
    k1_z = np.sqrt(k**2 - np.sum(k1_t**2, axis=1))
    k2_z = np.sqrt(k**2 - np.sum(k2_t**2, axis=1))
    pos1 = birth[:, :2] + k1_t / k1_z[:, None] * d1
    pos2 = birth[:, :2] + k2_t / k2_z[:, None] * d2
    return PhotonPairSample(birth=birth, k1_t=k1_t, k2_t=k2_t, pos1=pos1, pos2=pos2, d1=d1, d2=d2)


def _axis_density(x2, bounds, cov) -> np.ndarray:
    """Density of photon 2 along one axis jointly with photon 1 inside ``bounds``."""
    var1, c, var2 = cov[0, 0], cov[0, 1], cov[1, 1]
    x2 = np.asarray(x2, dtype=float)
    marg = np.exp(-0.5 * x2**2 / var2) / np.sqrt(2 * np.pi * var2)
    if bounds is None:
        return marg
    lo, hi = bounds
    m = c / var2 * x2
    s2 = var1 - c**2 / var2
    if hi == lo:
        # ideal pinhole: joint pdf at x1 = lo
        return marg * np.exp(-0.5 * (lo - m) ** 2 / s2) / np.sqrt(2 * np.pi * s2)
    s = np.sqrt(2.0 * s2)
    return marg * 0.5 * (special.erf((hi - m) / s) - special.erf((lo - m) / s))


def photon2_pair_density(x2, y2, mode: Photon1Mode, src: SourceParams, d1: float, d2: float) -> np.ndarray:
    """Per-pair density (1/mm^2) of photon 2 at ``(x2, y2)`` with photon 1 accepted by ``mode``."""
    px = _axis_density(x2, mode.bounds("x"), position_covariance(src, d1, d2, "x"))
    py = _axis_density(y2, mode.bounds("y"), position_covariance(src, d1, d2, "y"))
    return px * py


def _axis_peak(bounds, cov) -> float:
    if bounds is None:
        return float(_axis_density(0.0, None, cov))
    var1, c, var2 = cov[0, 0], cov[0, 1], cov[1, 1]
    centre = 0.5 * (bounds[0] + bounds[1])
    guess = c / var1 * centre
    span = 10 * np.sqrt(var2)
    res = optimize.minimize_scalar(
        lambda x: -_axis_density(x, bounds, cov), bounds=(guess - span, guess + span), method="bounded",
        options={"xatol": 1e-10},
    )
    return float(-res.fun)


def conditional_photon2_density(x2, y2, mode: Photon1Mode, src: SourceParams, d1: float, d2: float) -> np.ndarray:
    """Spatial prefactor of the coincidence probability, normalised to peak 1."""
    peak = _axis_peak(mode.bounds("x"), position_covariance(src, d1, d2, "x")) * _axis_peak(
        mode.bounds("y"), position_covariance(src, d1, d2, "y")
    )
    return photon2_pair_density(x2, y2, mode, src, d1, d2) / peak


def acceptance_probability(mode: Photon1Mode, src: SourceParams, d1: float, d2: float) -> float:
    """Probability that photon 1 passes the aperture of ``mode``."""
    prob = 1.0
    for axis in ("x", "y"):
        b = mode.bounds(axis)
        if b is None:
            continue
        s = np.sqrt(2 * position_covariance(src, d1, d2, axis)[0, 0])
        prob *= 0.5 * (special.erf(b[1] / s) - special.erf(b[0] / s))
    return prob
