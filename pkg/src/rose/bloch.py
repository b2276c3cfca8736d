"""Optical Bloch equations for a two-level atom at fixed detuning.

Convention shared by every module::

    ds/dt = -(i Delta + 1/T2) s + (i/2) Omega(t) w
    dw/dt = i (Omega* s - Omega s*) - (w + 1)/T1

with ``s = (u + i v)/2`` and ``w = -1`` in the ground state, so a resonant
rectangular pulse of area pi inverts exactly.  ``n_b = (w + 1)/2`` is the
upper-level population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepSizeError
from .pulses import ChsParams, chs_envelope

STABILITY_GUARD = 0.1
# Drive samples at step edges are taken this fraction of dt inside the step so
# that pulse edges aligned with the grid integrate exactly.
EDGE_NUDGE = 1e-7


@dataclass
class AtomState:
    s: complex | np.ndarray
    w: float | np.ndarray

    @classmethod
    def ground(cls, shape=()) -> "AtomState":
        return cls(np.zeros(shape, complex), -np.ones(shape))

    @property
    def n_b(self):
        return (np.asarray(self.w) + 1.0) / 2.0

    @property
    def bloch_norm(self):
        return 4.0 * np.abs(self.s) ** 2 + np.asarray(self.w) ** 2


def _rate(T: float) -> float:
    return 0.0 if math.isinf(T) else 1.0 / T


def sample_drive(drive: Callable, ta: float, n_steps: int, dt: float):
    """Drive at (start, middle, end) of each step, edges nudged inward."""
    k = np.arange(n_steps)
    t0 = ta + k * dt
    eps = EDGE_NUDGE * dt
    start = np.asarray(drive(t0 + eps), complex)
    mid = np.asarray(drive(t0 + 0.5 * dt), complex)
    end = np.asarray(drive(t0 + dt - eps), complex)
    return start, mid, end


def check_step(dt: float, max_rabi: float, max_detuning: float) -> None:
    worst = max(max_rabi, max_detuning)
    if dt * worst > STABILITY_GUARD:
        raise StepSizeError(
            f"dt={dt:.3g} s violates dt*max(|Omega|,|Delta|) <= {STABILITY_GUARD} "
            f"(max rate {worst:.3g} rad/s)",
            suggested_dt=STABILITY_GUARD / worst,
        )


def _derivs(s, w, delta, omega, g1, g2):
    ds = -(1j * delta + g2) * s + 0.5j * omega * w
    dw = 1j * (np.conj(omega) * s - omega * np.conj(s))
    return ds, dw.real - g1 * (w + 1.0)


def evolve(state: AtomState, detuning, drive: Callable, ta: float, tb: float,
           T1: float = math.inf, T2: float = math.inf, dt: float = 1e-8) -> AtomState:
    """Integrate from ``ta`` to ``tb`` with classical fixed-step RK4.

    ``detuning`` may be an array; the state then broadcasts against it and
    every atom sees the same ``drive(t)`` (vectorised callable, rad/s).
    The step is shrunk so an integer number of steps spans ``[ta, tb]``.
    """
    n = max(1, int(math.ceil((tb - ta) / dt - 1e-9)))
    h = (tb - ta) / n
    start, mid, end = sample_drive(drive, ta, n, h)
    delta = np.asarray(detuning, dtype=float)
    check_step(h, float(np.max(np.abs(np.concatenate([start, mid, end]))) if n else 0.0),
               float(np.max(np.abs(delta))) if delta.size else 0.0)
    g1, g2 = _rate(T1), _rate(T2)
    s = np.broadcast_to(np.asarray(state.s, complex), np.broadcast(delta, state.s).shape).copy()
    w = np.broadcast_to(np.asarray(state.w, float), s.shape).copy()
    for k in range(n):
        k1s, k1w = _derivs(s, w, delta, start[k], g1, g2)
        k2s, k2w = _derivs(s + 0.5 * h * k1s, w + 0.5 * h * k1w, delta, mid[k], g1, g2)
        k3s, k3w = _derivs(s + 0.5 * h * k2s, w + 0.5 * h * k2w, delta, mid[k], g1, g2)
        k4s, k4w = _derivs(s + h * k3s, w + h * k3w, delta, end[k], g1, g2)
        s = s + (h / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s)
        w = w + (h / 6.0) * (k1w + 2 * k2w + 2 * k3w + k4w)
    if np.ndim(s) == 0:
        return AtomState(complex(s), float(w))
    return AtomState(s, w)


def inversion_profile(p: ChsParams, detunings, T1: float = math.inf,
                      T2: float = math.inf, dt: float | None = None,
                      pulses: int = 1, gap: float | None = None) -> np.ndarray:
    """Upper-level population left by one CHS (or ``pulses`` identical ones).

    Atoms start in the ground state.  Repeated pulses are spaced by ``gap``
    (default: back to back, i.e. the full pulse duration).
    """
    lo, hi = p.support
    dur = hi - lo
    gap = dur if gap is None else gap
    det = np.asarray(detunings, dtype=float)
    if dt is None:
        dt = STABILITY_GUARD / max(p.Omega0, float(np.max(np.abs(det))) if det.size else 0.0, 1.0) / 2
    shifted = [ChsParams(p.Omega0, p.beta, p.mu, p.t0 + i * gap, p.carrier_offset, p.truncation)
               for i in range(pulses)]

    def drive(t):
        return sum(chs_envelope(q, t) for q in shifted)

    st = evolve(AtomState.ground(det.shape), det, drive, lo, hi + (pulses - 1) * gap, T1, T2, dt)
    return np.asarray(st.n_b)


def edge_width(detunings, n_b, lo_frac: float = 0.1, hi_frac: float = 0.9) -> float:
    """10-90% width (rad/s) of the upper edge of an inversion profile.

    Levels are taken relative to the plateau (value at the profile center)
    and the outer baseline; the crossing points are linearly interpolated.
    """
    det = np.asarray(detunings, float)
    nb = np.asarray(n_b, float)
    order = np.argsort(det)
    det, nb = det[order], nb[order]
    i0 = int(np.argmin(np.abs(det)))
    plateau = nb[i0]
    base = nb[-1]
    side_d, side_n = det[i0:], nb[i0:]

    def crossing(frac):
        level = base + frac * (plateau - base)
        idx = np.nonzero(side_n < level)[0]
        if idx.size == 0:
            return math.nan
        j = idx[0]
        if j == 0:
            return side_d[0]
        x0, x1, y0, y1 = side_d[j - 1], side_d[j], side_n[j - 1], side_n[j]
        return x0 + (level - y0) * (x1 - x0) / (y1 - y0)

    return crossing(lo_frac) - crossing(hi_frac)
