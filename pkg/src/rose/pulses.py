"""Driving-field envelopes and chirped-pulse diagnostics.

Envelopes are complex Rabi frequencies (rad/s) in the frame rotating at the
signal carrier.  A drive whose instantaneous frequency offset is ``w(t)``
carries the phase ``exp(-i * integral(w))``, so it is resonant with atoms of
detuning ``Delta = w(t)`` under the Bloch equations used in ``rose.bloch``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInputError

FWD = +1
BWD = -1

# The analytic sech^2 integral is used for the incoming energy; truncating
# at +-6/beta changes it by 1 - tanh(6) ~ 1.2e-5.
_SQRT_PI_2LN2 = math.sqrt(math.pi / (2.0 * math.log(2.0)))


@dataclass(frozen=True)
class ChsParams:
    """Complex hyperbolic secant pulse.

    ``truncation`` is the half-duration in units of 1/beta.
    """

    Omega0: float
    beta: float
    mu: float
    t0: float
    carrier_offset: float = 0.0
    truncation: float = 6.0

    def __post_init__(self):
        if not (self.Omega0 > 0 and self.beta > 0 and self.mu >= 0 and self.truncation > 0):
            raise InvalidInputError(f"invalid CHS parameters: {self}")

    @property
    def support(self) -> tuple[float, float]:
        h = self.truncation / self.beta
        return self.t0 - h, self.t0 + h

    @property
    def span(self) -> float:
        """Full chirp excursion 2*mu*beta (rad/s)."""
        return 2.0 * self.mu * self.beta


@dataclass(frozen=True)
class GaussianParams:
    """Gaussian pulse; ``fwhm`` is the full width at half maximum of |Omega|^2."""

    fwhm: float
    area: float
    t_center: float
    carrier_offset: float = 0.0

    def __post_init__(self):
        if not (self.fwhm > 0 and self.area >= 0):
            raise InvalidInputError(f"invalid gaussian parameters: {self}")

    @property
    def peak(self) -> float:
        return self.area / (self.fwhm * _SQRT_PI_2LN2)

    @property
    def support(self) -> tuple[float, float]:
        return self.t_center - 3 * self.fwhm, self.t_center + 3 * self.fwhm


@dataclass(frozen=True)
class RectParams:
    duration: float
    area: float
    t_start: float

    def __post_init__(self):
        if not self.duration > 0:
            raise InvalidInputError(f"invalid rect parameters: {self}")

    @property
    def amplitude(self) -> float:
        return self.area / self.duration

    @property
    def support(self) -> tuple[float, float]:
        return self.t_start, self.t_start + self.duration


Params = Union[GaussianParams, RectParams, ChsParams]
_SHAPES = {"gaussian": GaussianParams, "rect": RectParams, "chs": ChsParams}


@dataclass(frozen=True)
class PulseEvent:
    shape: str
    params: Params
    direction: int = FWD

    def __post_init__(self):
        kind = _SHAPES.get(self.shape)
        if kind is None:
            raise InvalidInputError(f"unknown pulse shape {self.shape!r}")
        if not isinstance(self.params, kind):
            raise InvalidInputError(f"shape {self.shape!r} needs {kind.__name__}")
        if self.direction not in (FWD, BWD):
            raise InvalidInputError("direction must be +1 (+z) or -1 (-z)")

    @property
    def time(self) -> float:
        """Reference time: center for gaussian/chs, start for rect."""
        p = self.params
        if isinstance(p, GaussianParams):
            return p.t_center
        if isinstance(p, ChsParams):
            return p.t0
        return p.t_start

    @property
    def center(self) -> float:
        lo, hi = self.params.support
        if isinstance(self.params, RectParams):
            return 0.5 * (lo + hi)
        return self.time

    @property
    def support(self) -> tuple[float, float]:
        return self.params.support

    def envelope(self, t):
        return envelope(self.params, t)


def chs_envelope(p: ChsParams, t):
    """Omega0 sech(beta (t - t0)) with phase -(w0 (t - t0) + mu ln cosh(beta (t - t0)))."""
    t = np.asarray(t, dtype=float)
    x = p.beta * (t - p.t0)
    inside = np.abs(x) <= p.truncation
    xc = np.where(inside, x, 0.0)
    # ln cosh x = |x| + log1p(exp(-2|x|)) - ln 2, stable for large |x|
    ax = np.abs(xc)
    lncosh = ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)
    phase = -(p.carrier_offset * (t - p.t0) + p.mu * lncosh)
    amp = p.Omega0 / np.cosh(xc)
    return np.where(inside, amp * np.exp(1j * phase), 0.0 + 0.0j)


def chs_instantaneous_frequency(p: ChsParams, t):
    return p.carrier_offset + p.mu * p.beta * np.tanh(p.beta * (np.asarray(t, float) - p.t0))


def gaussian_envelope(p: GaussianParams, t):
    t = np.asarray(t, dtype=float)
    dt = t - p.t_center
    amp = p.peak * np.exp(-2.0 * math.log(2.0) * (dt / p.fwhm) ** 2)
    return amp * np.exp(-1j * p.carrier_offset * dt)


def rect_envelope(p: RectParams, t):
    t = np.asarray(t, dtype=float)
    on = (t >= p.t_start) & (t < p.t_start + p.duration)
    return np.where(on, p.amplitude, 0.0).astype(complex)


def envelope(p: Params, t):
    if isinstance(p, ChsParams):
        return chs_envelope(p, t)
    if isinstance(p, GaussianParams):
        return gaussian_envelope(p, t)
    if isinstance(p, RectParams):
        return rect_envelope(p, t)
    raise InvalidInputError(f"unsupported params {type(p).__name__}")


def peak_rabi(p: Params) -> float:
    if isinstance(p, ChsParams):
        return p.Omega0
    if isinstance(p, GaussianParams):
        return p.peak
    return abs(p.amplitude)


def chirp_rate_max(p: ChsParams) -> float:
    """Maximum chirp rate mu * beta**2 (rad/s^2), reached at t0."""
    return p.mu * p.beta**2


def adiabaticity(p: ChsParams) -> float:
    """r0 / Omega0**2; adiabatic passage needs this well below 1."""
    return chirp_rate_max(p) / p.Omega0**2


def refocusing_parameter(p: ChsParams, tau: float) -> float:
    """2 pi / (r0 tau^2) for a signal of duration tau."""
    r0 = chirp_rate_max(p)
    if r0 == 0:
        return math.inf
    if math.isinf(tau):
        return 0.0
    return 2.0 * math.pi / (r0 * tau**2)


HBAR = 1.054571817e-34
C_LIGHT = 299792458.0
EPS0 = 8.8541878128e-12


def pulse_energies(p: ChsParams, medium, beam_area: float, dipole: float | None = None):
    """Incoming energy, energy left in fully inverted atoms, and their ratio.

    The ratio ``(2/pi) (r0/Omega0^2) alphaL`` needs neither the dipole moment
    nor the atomic density.  With ``dipole`` (C m) the two energies are in
    joules, the spectro-spatial density being inferred from the absorption
    coefficient.  Without it both energies are expressed in units of
    ``c eps0 hbar^2 / d^2`` (i.e. ``W_in = A Omega0^2 / beta``).
    """
    if not beam_area > 0:
        raise InvalidInputError("beam area must be positive")
    ratio = (2.0 / math.pi) * adiabaticity(p) * medium.alphaL
    w_in = beam_area * p.Omega0**2 / p.beta
    if dipole is None:
        return w_in, w_in * ratio, ratio
    w_in_j = w_in * C_LIGHT * EPS0 * (HBAR / dipole) ** 2
    omega_c = 2.0 * math.pi * C_LIGHT / medium.wavelength
    alpha = medium.alphaL / medium.L
    density = alpha * C_LIGHT * HBAR * EPS0 / (math.pi * omega_c * dipole**2)
    w_at = 2.0 * p.mu * p.beta * beam_area * medium.L * density * HBAR * omega_c
    return w_in_j, w_at, w_at / w_in_j
