"""Wavevector algebra for echo phase matching.

All vectors are plain length-3 numpy arrays in rad/m.  The dynamical solver
is one-dimensional, so the only thing it takes from here is the sign of the
projection of an emitted wavevector on the optical axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidGeometryError, InvalidInputError

_MAG_RTOL = 1e-9
Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class WaveVector:
    direction: np.ndarray
    k: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(3)
        if not self.k > 0:
            raise InvalidGeometryError(f"wavevector magnitude must be > 0, got {self.k}")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise InvalidGeometryError("direction must be a unit vector")
        object.__setattr__(self, "direction", d)

    @classmethod
    def from_vector(cls, v) -> "WaveVector":
        v = np.asarray(v, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            raise InvalidGeometryError("zero vector has no direction")
        return cls(v / n, n)

    @classmethod
    def from_wavelength(cls, direction, wavelength: float) -> "WaveVector":
        d = np.asarray(direction, dtype=float)
        return cls(d / np.linalg.norm(d), 2 * math.pi / wavelength)

    @property
    def vector(self) -> np.ndarray:
        return self.k * self.direction


@dataclass(frozen=True)
class PhaseMatchReport:
    k_out: np.ndarray
    mismatch_phase: float
    silenced: bool
    coherence_length: float


def _as_vec(kv) -> np.ndarray:
    if isinstance(kv, WaveVector):
        return kv.vector
    return np.asarray(kv, dtype=float).reshape(3)


def _check_same_magnitude(*vecs: np.ndarray) -> None:
    mags = [float(np.linalg.norm(v)) for v in vecs]
    ref = mags[0]
    for m in mags[1:]:
        if abs(m - ref) > _MAG_RTOL * ref:
            raise InvalidGeometryError(
                f"wavevector magnitudes differ: {mags} (relative tolerance {_MAG_RTOL})"
            )


def primary_echo_wavevector(k1, k2) -> np.ndarray:
    """Two-pulse echo direction ``2 k2 - k1``."""
    v1, v2 = _as_vec(k1), _as_vec(k2)
    _check_same_magnitude(v1, v2)
    return 2.0 * v2 - v1


def rose_echo_wavevector(k1, k2, k3) -> np.ndarray:
    """Revived echo direction ``k1 + 2 (k3 - k2)``, i.e. ``2 k3 - k_e``."""
    v1, v2, v3 = _as_vec(k1), _as_vec(k2), _as_vec(k3)
    _check_same_magnitude(v1, v2, v3)
    return v1 + 2.0 * (v3 - v2)


def phase_match(k_out, k: float, L: float) -> PhaseMatchReport:
    """Decide whether radiation along ``k_out`` builds up over a slab of length L.

    The mismatch phase is ``(|k_out| - k) L``.  The flag uses the strict
    threshold ``mismatch_phase > pi``; callers wanting the asymptotic
    ``<< pi`` reading can apply their own bound to the returned number.
    """
    if not k > 0 or not L > 0:
        raise InvalidInputError("k and L must be positive")
    v = _as_vec(k_out)
    dk = float(np.linalg.norm(v)) - k
    mismatch = dk * L
    if abs(dk) * L <= math.pi:
        coh = math.inf
    else:
        coh = math.pi / abs(dk)
    return PhaseMatchReport(v, mismatch, mismatch > math.pi, coh)


def axis_sign(k_out, axis=Z_AXIS) -> int:
    """Sign of the projection on the optical axis (+1, -1, or 0)."""
    p = float(np.dot(_as_vec(k_out), axis))
    return int(np.sign(p))
