"""Two-photon polarisation algebra.

States live on the product basis ``(HH, HV, VH, VV)`` with the first letter
for photon 1.  A linear polariser at angle ``delta`` (degrees from the
horizontal) passes ``cos(delta)|H> + sin(delta)|V>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

HH, HV, VH, VV = range(4)

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class TwoPhotonPolarizationState:
    """Pure two-photon polarisation state, amplitudes ordered HH, HV, VH, VV."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(4)
        norm = np.vdot(amps, amps).real
        if not np.isfinite(norm) or norm <= 0.0:
            raise ValueError("state amplitudes must be finite and not all zero")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def overlap(self, other: "TwoPhotonPolarizationState") -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def same_ray(self, other: "TwoPhotonPolarizationState", atol: float = 1e-12) -> bool:
        """True if the states agree up to a global phase."""
        return abs(abs(self.overlap(other)) - 1.0) <= atol


def normalize_angle(delta: float) -> float:
    """Map an angle in degrees onto the reporting interval (-90, 90]."""
    d = float(np.mod(delta, 180.0))
    return d - 180.0 if d > 90.0 else d


def polarizer_vector(delta) -> np.ndarray:
    """Jones vector(s) ``(cos, sin)`` for pass-axis angle(s) in degrees."""
    rad = np.deg2rad(delta)
    return np.stack([np.cos(rad), np.sin(rad)], axis=-1)


def bell_state(kind: str = "psi_minus") -> TwoPhotonPolarizationState:
    if kind == "psi_minus":
        sign = -1.0
    elif kind == "psi_plus":
        sign = 1.0
    else:
        raise ValueError(f"unknown Bell state {kind!r}; expected 'psi_minus' or 'psi_plus'")
    return TwoPhotonPolarizationState(np.array([0.0, _SQRT_HALF, sign * _SQRT_HALF, 0.0]))


def apply_phase_imprint(state: TwoPhotonPolarizationState, phi: float) -> TwoPhotonPolarizationState:
    """Apply ``|H>_2 -> exp(i phi)|H>_2``; ``|V>_2`` is untouched."""
    amps = state.amps.copy()
    shift = np.exp(1j * phi)
    amps[HH] *= shift
    amps[VH] *= shift
    return TwoPhotonPolarizationState(amps)


def projection_amplitude(state: TwoPhotonPolarizationState, d1: float, d2: float) -> complex:
    """Amplitude ``<d1|<d2|state>`` for polariser angles in degrees."""
    c1 = polarizer_vector(d1)
    c2 = polarizer_vector(d2)
    return complex(c1 @ state.amps.reshape(2, 2) @ c2)


def projection_probability(state: TwoPhotonPolarizationState, d1: float, d2: float) -> float:
    return abs(projection_amplitude(state, d1, d2)) ** 2


def conditional_phase_response(
    d1: float, d2: float, base: TwoPhotonPolarizationState | None = None
) -> Callable[[np.ndarray], np.ndarray]:
    """Per-pixel amplitude ``a(phi)`` for a fixed polariser pair.

    The imprint only touches the ``H_2`` column, so the projection is affine in
    ``exp(i phi)``: ``a(phi) = a_H * exp(i phi) + a_V``.  The returned callable
    is vectorised over ``phi``.
    """
    if base is None:
        base = bell_state("psi_minus")
    m = base.amps.reshape(2, 2)
    c1 = polarizer_vector(d1)
    c2 = polarizer_vector(d2)
    a_h = complex(c1 @ m[:, 0]) * c2[0]
    a_v = complex(c1 @ m[:, 1]) * c2[1]

    def response(phi):
        return a_h * np.exp(1j * np.asarray(phi, dtype=float)) + a_v

    return response
