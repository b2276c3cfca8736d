"""Discretised inhomogeneously broadened medium.

Atoms are sampled on a (slice, detuning, optical phase[, transverse shell])
grid.  The optical phase ``phi_j = 2 pi j / n_phi`` stands for the position
of an atom inside one wavelength, so a forward field reaches it as
``Omega_plus e^{+i phi}`` and a backward one as ``Omega_minus e^{-i phi}``.
Spatial gratings then show up as harmonics in ``phi`` and only orders +-1
radiate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True)
class MediumSpec:
    """Flat-top inhomogeneous absorber.

    ``inhom_halfwidth`` (rad/s) is the half-width of the uniform detuning
    distribution, which is also the span covered by the detuning grid.
    """

    alphaL: float
    L: float
    T1: float = math.inf
    T2: float = math.inf
    wavelength: float = 1.536e-6
    inhom_halfwidth: float = 2e6

    def __post_init__(self):
        if self.alphaL < 0 or not self.L > 0:
            raise InvalidInputError(f"invalid medium: {self}")
        if not (self.T1 > 0 and self.T2 > 0 and self.inhom_halfwidth > 0):
            raise InvalidInputError(f"invalid medium: {self}")

    @property
    def alpha(self) -> float:
        return self.alphaL / self.L


@dataclass(frozen=True)
class EnsembleGrid:
    n_z: int = 64
    n_det: int = 801
    n_phi: int = 8
    n_r: int = 1
    dt: float = 1e-8

    def __post_init__(self):
        if self.n_z < 1 or self.n_det < 3 or self.n_r < 1 or not self.dt > 0:
            raise ConfigurationError(f"invalid grid: {self}")
        if self.n_phi < 8:
            raise ConfigurationError(
                f"n_phi={self.n_phi} < 8 cannot resolve grating orders up to |3|"
            )

    def detunings(self, medium: MediumSpec) -> np.ndarray:
        W = medium.inhom_halfwidth
        return np.linspace(-W, W, self.n_det)

    def detuning_weights(self, medium: MediumSpec) -> np.ndarray:
        """Trapezoidal weights normalised to 1 (the flat-top is a density)."""
        wt = np.ones(self.n_det)
        wt[0] = wt[-1] = 0.5
        return wt / wt.sum()

    def detuning_step(self, medium: MediumSpec) -> float:
        return 2.0 * medium.inhom_halfwidth / (self.n_det - 1)

    def phases(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_phi) / self.n_phi

    def z_centers(self, medium: MediumSpec) -> np.ndarray:
        dz = medium.L / self.n_z
        return (np.arange(self.n_z) + 0.5) * dz

    def check(self, medium: MediumSpec, duration: float, max_span: float = 0.0) -> None:
        """Validate the grid against a schedule of the given length.

        ``max_span`` is the largest chirp half-excursion (rad/s) that must
        fall inside the inhomogeneous line.
        """
        step = self.detuning_step(medium)
        limit = 2.0 * math.pi / (10.0 * duration)
        if step > limit * (1 + 1e-9):
            raise ConfigurationError(
                f"detuning spacing {step:.4g} rad/s exceeds 2pi/(10 x duration) = "
                f"{limit:.4g} rad/s; raise n_det or lower inhom_halfwidth"
            )
        if max_span > medium.inhom_halfwidth:
            raise ConfigurationError(
                f"inhom_halfwidth {medium.inhom_halfwidth:.4g} rad/s is narrower than "
                f"the chirp half-span {max_span:.4g} rad/s"
            )

    def with_overrides(self, **kw) -> "EnsembleGrid":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


@dataclass
class EnsembleState:
    """Atom coherences ``s`` and inversions ``w`` indexed ``[r, z, det, phi]``."""

    s: np.ndarray
    w: np.ndarray
    phases: np.ndarray
    time: float = 0.0
    weights: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def ground(cls, grid: EnsembleGrid) -> "EnsembleState":
        shape = (grid.n_r, grid.n_z, grid.n_det, grid.n_phi)
        return cls(np.zeros(shape, complex), -np.ones(shape), grid.phases())

    @property
    def n_cells(self) -> int:
        return self.s.size

    @property
    def n_b(self) -> np.ndarray:
        return (self.w + 1.0) / 2.0


def local_drive(phi, omega_plus, omega_minus):
    """Rabi frequency seen by atoms at optical phase ``phi``."""
    return omega_plus * np.exp(1j * phi) + omega_minus * np.exp(-1j * phi)


def polarization_projection(state: EnsembleState, z: int, order: int,
                            weights=None, shell: int | None = None) -> complex:
    """Macroscopic polarisation of slice ``z`` on grating ``order``.

    ``order=+1`` sources the forward field and ``-1`` the backward one; any
    integer order is accepted for diagnostics.  The average is over phases,
    detunings (``weights``, uniform if omitted) and shells.
    """
    s = state.s[:, z] if shell is None else state.s[shell:shell + 1, z]
    nd = s.shape[1]
    wt = np.full(nd, 1.0 / nd) if weights is None else np.asarray(weights) / np.sum(weights)
    kern = np.exp(-1j * order * state.phases)
    per_shell = np.einsum("rdj,d,j->r", s, wt, kern) / s.shape[2]
    return complex(per_shell.mean())


def grating_orders(s_phi: np.ndarray) -> np.ndarray:
    """Harmonic amplitudes ``c_m`` of ``s = sum_m c_m e^{i m phi}`` along the last axis.

    Returned in FFT order: index m (mod n_phi).
    """
    return np.fft.fft(s_phi, axis=-1) / s_phi.shape[-1]


def transverse_shells(n_r: int, rho: float, w_s: float = 1.0):
    """Radii, signal weights and pump scale factors for ``n_r`` shells.

    Uses Gauss-Laguerre nodes in ``u = 2 r^2 / w_s^2`` so that the signal
    intensity weighting ``e^{-2r^2/w_s^2} r dr`` is integrated exactly for
    smooth shell responses.  ``rho`` is the pump-to-signal waist ratio.
    """
    if n_r < 1:
        raise InvalidInputError("n_r must be >= 1")
    if n_r == 1:
        return np.zeros(1), np.ones(1), np.ones(1)
    u, wts = np.polynomial.laguerre.laggauss(n_r)
    r = w_s * np.sqrt(u / 2.0)
    if math.isinf(rho):
        pump = np.ones(n_r)
    else:
        pump = np.exp(-(r / (rho * w_s)) ** 2)
    return r, wts / wts.sum(), pump


def transverse_average(values, w_s: float = 1.0, rho: float = math.inf, weights=None):
    """Signal-intensity-weighted average of per-shell results."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        _, weights, _ = transverse_shells(len(values), rho, w_s)
    return float(np.dot(weights, values))
