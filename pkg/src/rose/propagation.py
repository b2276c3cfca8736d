"""Two-way field solver coupled to the atomic ensemble.

The forward field enters at z=0 and the backward field at z=L.  Light
crosses a millimetre slab in picoseconds, far below any time step of
interest, so both fields are rebuilt from the polarisation at every RK
stage instead of being marched along characteristics:

    dOmega_+/dz = -i kappa P_+(z),    -dOmega_-/dz = -i kappa P_-(z)

``kappa`` is fixed by calibrating a weak probe against Beer's law on the
actual grid.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _kernel
from .bloch import EDGE_NUDGE, check_step
from .ensemble import EnsembleGrid, EnsembleState, MediumSpec, transverse_shells
from .errors import ConfigurationError, InvalidInputError
from .pulses import (BWD, FWD, ChsParams, GaussianParams, PulseEvent, RectParams,
                     envelope, peak_rabi)

log = logging.getLogger(__name__)

BEER_RTOL = 5e-3


@dataclass
class FieldTrace:
    """Envelopes recorded at the two faces, one sample per step edge."""

    times: np.ndarray
    fwd_out: np.ndarray  # Omega_+ at z = L
    bwd_out: np.ndarray  # Omega_- at z = 0
    fwd_in: np.ndarray   # Omega_+ injected at z = 0
    bwd_in: np.ndarray   # Omega_- injected at z = L

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def output(self, direction: int) -> np.ndarray:
        return self.fwd_out if direction == FWD else self.bwd_out

    def input(self, direction: int) -> np.ndarray:
        return self.fwd_in if direction == FWD else self.bwd_in


@dataclass
class Simulation:
    """Raw output of one march (one transverse shell)."""

    trace: FieldTrace
    nb_line: np.ndarray
    snapshots: dict = field(default_factory=dict)
    flux: np.ndarray | None = None     # integral |Omega_+|^2 dt at slice boundaries
    area: np.ndarray | None = None     # integral Omega_+ dt at slice boundaries
    coupling: float = 0.0


def _drive_samples(events, direction, t0, n, dt, scale):
    k = np.arange(n)
    eps = EDGE_NUDGE * dt
    starts = t0 + k * dt
    out = []
    for tt in (starts + eps, starts + 0.5 * dt, starts + dt - eps):
        acc = np.zeros(n, complex)
        for ev, sc in zip(events, scale):
            if ev.direction == direction:
                acc += sc * envelope(ev.params, tt)
        out.append(acc)
    return out


def _band_weights(det, wt, band):
    mask = np.abs(det) <= band * (1 + 1e-12)
    if not mask.any():
        mask[np.argmin(np.abs(det))] = True
    b = np.where(mask, wt, 0.0)
    return b / b.sum()


def simulate(medium: MediumSpec, grid: EnsembleGrid, events, t_start: float, n_steps: int,
             coupling: float, *, scale=None, initial_w=-1.0, snapshot_steps=(),
             record_profiles: bool = False, band: float | None = None,
             workers: int = 1, n_phi: int | None = None, symmetric: bool = True,
             check: bool = True) -> Simulation:
    """Run the compiled marcher for ``n_steps`` steps from ``t_start``.

    ``initial_w`` may be a scalar or an array broadcastable to
    ``(n_z, n_det)``; coherences start at zero.  That initial state is
    invariant under ``(s, w) -> (-s, w)`` at ``phi -> phi + pi``, which the
    equations preserve, so with ``symmetric`` only half the phases are
    integrated.
    """
    dt = grid.dt
    n_phi = grid.n_phi if n_phi is None else n_phi
    det = grid.detunings(medium)
    wt = grid.detuning_weights(medium)
    phases = 2 * math.pi * np.arange(n_phi) / n_phi
    reduce = symmetric and n_phi % 2 == 0
    nc = n_phi // 2 if reduce else n_phi
    cph, sph = np.cos(phases[:nc]), np.sin(phases[:nc])
    scale = np.ones(len(events)) if scale is None else np.asarray(scale, float)

    f_s, f_m, f_e = _drive_samples(events, FWD, t_start, n_steps, dt, scale)
    b_s, b_m, b_e = _drive_samples(events, BWD, t_start, n_steps, dt, scale)
    if check:
        peak = float(np.max(np.abs(f_m))) + float(np.max(np.abs(b_m)))
        check_step(dt, peak, medium.inhom_halfwidth)

    w0 = np.broadcast_to(np.asarray(initial_w, float), (grid.n_z, grid.n_det))
    x = np.zeros((grid.n_z, nc, grid.n_det))
    y = np.zeros_like(x)
    w = np.ascontiguousarray(np.repeat(w0[:, None, :], nc, axis=1))

    snap_idx = np.array(sorted(set(int(s) for s in snapshot_steps if 0 <= s <= n_steps)), np.int64)
    ns = len(snap_idx)
    snap_x = np.zeros((ns,) + x.shape)
    snap_y = np.zeros_like(snap_x)
    snap_w = np.zeros_like(snap_x)
    out_f = np.zeros(n_steps + 1, complex)
    out_b = np.zeros(n_steps + 1, complex)
    nb_line = np.zeros(n_steps + 1)
    flux = np.zeros(grid.n_z + 1)
    area = np.zeros(grid.n_z + 1, complex)
    band = medium.inhom_halfwidth if band is None else band
    bw = _band_weights(det, wt, band)
    g1 = 0.0 if math.isinf(medium.T1) else 1.0 / medium.T1
    g2 = 0.0 if math.isinf(medium.T2) else 1.0 / medium.T2
    workers = max(1, min(int(workers), grid.n_z))

    _kernel.march(x, y, w, det, wt, cph, sph, float(coupling), g1, g2, dt,
                  f_s, f_m, f_e, b_s, b_m, b_e, bw,
                  snap_idx, snap_x, snap_y, snap_w,
                  out_f, out_b, nb_line, flux, area, record_profiles, workers)

    times = t_start + dt * np.arange(n_steps + 1)
    fin = np.append(f_s, f_e[-1]) if n_steps else np.zeros(1, complex)
    bin_ = np.append(b_s, b_e[-1]) if n_steps else np.zeros(1, complex)
    trace = FieldTrace(times, out_f, out_b, fin, bin_)

    snaps = {}
    for i, k in enumerate(snap_idx):
        sx = snap_x[i] + 1j * snap_y[i]           # (z, c, det)
        sw = snap_w[i]
        if reduce:
            sx = np.concatenate([sx, -sx], axis=1)
            sw = np.concatenate([sw, sw], axis=1)
        s4 = np.transpose(sx, (0, 2, 1))[None]     # (r, z, det, phi)
        w4 = np.transpose(sw, (0, 2, 1))[None]
        snaps[int(k)] = EnsembleState(s4, w4, phases, float(times[k]), wt)
    return Simulation(trace, nb_line, snaps,
                      flux if record_profiles else None,
                      area if record_profiles else None, coupling)


def nominal_coupling(medium: MediumSpec, grid: EnsembleGrid) -> float:
    """Per-slice source scale of the continuum limit, (alpha/pi) (2W) dz."""
    return medium.alpha / math.pi * 2.0 * medium.inhom_halfwidth * medium.L / grid.n_z


def probe_event(medium: MediumSpec, area: float = 1e-3 * math.pi, t_center: float = 0.0):
    """Weak gaussian whose spectrum (FWHM W/2) sits well inside the line."""
    fwhm = 8.0 * math.log(2.0) / medium.inhom_halfwidth
    return PulseEvent("gaussian", GaussianParams(fwhm, area, t_center), FWD)


def probe_transmission(medium: MediumSpec, grid: EnsembleGrid, coupling: float,
                       initial_w=-1.0) -> float:
    """Energy transmission of a weak forward probe through the slab."""
    ev = probe_event(medium)
    fwhm = ev.params.fwhm
    t0 = -3.0 * fwhm
    n = int(math.ceil(6.0 * fwhm / grid.dt))
    # forward-only drive: coherences are pure order +1, so 4 phase samples
    # (2 integrated) reproduce the projections of any n_phi exactly
    sim = simulate(medium, grid, [ev], t0, n, coupling, initial_w=initial_w, n_phi=4)
    tr = sim.trace
    e_out = np.trapezoid(np.abs(tr.fwd_out) ** 2, dx=grid.dt)
    e_in = np.trapezoid(np.abs(tr.fwd_in) ** 2, dx=grid.dt)
    return float(e_out / e_in)


@functools.lru_cache(maxsize=64)
def calibrate_coupling(medium: MediumSpec, grid: EnsembleGrid) -> float:
    """Per-slice coupling giving weak-probe transmission ``exp(-alphaL)``.

    Solved by secant iteration on ``ln T`` (nearly linear in the coupling).
    """
    if medium.alphaL == 0:
        return 0.0
    target = -medium.alphaL
    k0 = nominal_coupling(medium, grid)

    def resid(c):
        return math.log(probe_transmission(medium, grid, c * k0)) - target

    r0 = resid(1.0)
    if abs(r0) < 1e-5:
        return k0
    c1 = target / (r0 + target) if (r0 + target) < 0 else 1.1
    try:
        sol = optimize.root_scalar(resid, x0=1.0, x1=c1, method="secant",
                                   xtol=1e-7, rtol=1e-7, maxiter=12)
    except (ValueError, OverflowError) as exc:
        raise ConfigurationError(f"coupling calibration failed: {exc}") from exc
    c = sol.root
    if not sol.converged or not (0.2 < c < 5.0) or abs(resid(c)) > BEER_RTOL / 2:
        raise ConfigurationError(
            "coupling calibration did not converge; check that the probe "
            f"spectrum fits inside inhom_halfwidth and alpha*dz = "
            f"{medium.alpha * medium.L / grid.n_z:.3g} is small (raise n_z)"
        )
    log.debug("coupling calibrated: factor %.6f of nominal", c)
    return c * k0


def gain_check(medium: MediumSpec, grid: EnsembleGrid, coupling: float | None = None) -> float:
    """Intensity gain of a weak probe after full inversion.

    Returned as the ratio of transmissions through the inverted and the
    ground-state medium (``exp(2 alphaL)`` for complete inversion).
    """
    if coupling is None:
        coupling = calibrate_coupling(medium, grid)
    t_inv = probe_transmission(medium, grid, coupling, initial_w=+1.0)
    t_gnd = probe_transmission(medium, grid, coupling, initial_w=-1.0)
    return t_inv / t_gnd


def area_along_z(area: np.ndarray) -> np.ndarray:
    """Pulse area |integral Omega dt| at each recorded slice boundary."""
    return np.abs(np.asarray(area))


def half_energy_depth(z: np.ndarray, flux: np.ndarray) -> float:
    """First depth where the transmitted energy drops to half its input value."""
    target = 0.5 * flux[0]
    idx = np.nonzero(flux <= target)[0]
    if idx.size == 0:
        return math.nan
    j = idx[0]
    if j == 0:
        return float(z[0])
    return float(z[j - 1] + (target - flux[j - 1]) * (z[j] - z[j - 1]) / (flux[j] - flux[j - 1]))


def propagate_pulse(medium: MediumSpec, grid: EnsembleGrid, event: PulseEvent,
                    tail: float, coupling: float | None = None) -> Simulation:
    """Send one forward pulse through the slab recording energy and area vs depth."""
    if coupling is None:
        coupling = calibrate_coupling(medium, grid)
    lo, hi = event.support
    t0 = math.floor(lo / grid.dt) * grid.dt
    n = int(math.ceil((hi + tail - t0) / grid.dt))
    return simulate(medium, grid, [event], t0, n, coupling, record_profiles=True, n_phi=4)


def pi_pulse_attenuation(medium: MediumSpec, grid: EnsembleGrid, duration: float,
                         area: float = math.pi, tail: float | None = None,
                         coupling: float | None = None):
    """Depth at which a rectangular pulse has lost half its energy.

    Returns ``(z50, z_boundaries, flux, theta)``.
    """
    if area == 0:
        raise InvalidInputError("zero-area pulse carries no energy")
    if medium.inhom_halfwidth < 10.0 / duration:
        raise ConfigurationError(
            f"inhom_halfwidth {medium.inhom_halfwidth:.3g} rad/s does not cover the "
            f"pulse spectrum (need >= 10/duration = {10 / duration:.3g})"
        )
    ev = PulseEvent("rect", RectParams(duration, area, 0.0), FWD)
    tail = 20.0 * duration if tail is None else tail
    sim = propagate_pulse(medium, grid, ev, tail, coupling)
    zb = np.linspace(0.0, medium.L, grid.n_z + 1)
    return half_energy_depth(zb, sim.flux), zb, sim.flux, area_along_z(sim.area)


def schedule_span(events, windows=(), extra_times=(), dt: float = 1e-8):
    lo = min([e.support[0] for e in events] + [w.t_start for w in windows] + list(extra_times))
    hi = max([e.support[1] for e in events] + [w.t_end for w in windows] + list(extra_times))
    lo = math.floor(lo / dt + 1e-9) * dt
    return lo, hi


def max_chirp_halfspan(events) -> float:
    spans = [e.params.mu * e.params.beta for e in events if isinstance(e.params, ChsParams)]
    return max(spans, default=0.0)


def run_schedule(medium: MediumSpec, grid: EnsembleGrid, schedule, windows=(),
                 snapshot_times=(), *, coupling: float | None = None, t_span=None,
                 workers: int = 1, rho: float = math.inf, record_profiles: bool = False,
                 band: float | None = None, check_grid: bool = True):
    """Run a pulse schedule; returns ``(trace, snapshots, result)``.

    ``trace`` is the signal-weighted transverse average when ``grid.n_r > 1``
    (each shell is an independent column with the rephasing pulses scaled by
    the pump profile).  ``snapshots`` maps requested times to ensemble
    states.  ``result`` is a :class:`rose.protocol.RunResult`.
    """
    from . import protocol

    events = list(schedule.events if hasattr(schedule, "events") else schedule)
    if not events:
        raise InvalidInputError("empty schedule")
    times = [e.time for e in events]
    if times != sorted(times):
        raise InvalidInputError("pulses must be sorted by time")
    windows = list(windows)
    if t_span is None:
        t0, t1 = schedule_span(events, windows, snapshot_times, grid.dt)
    else:
        t0, t1 = t_span
        t0 = math.floor(t0 / grid.dt + 1e-9) * grid.dt
    n = int(math.ceil((t1 - t0) / grid.dt - 1e-9))
    if check_grid:
        grid.check(medium, protocol.schedule_duration(events, windows),
                   max_chirp_halfspan(events))
    if coupling is None:
        coupling = calibrate_coupling(medium, grid)
    snap_steps = {float(t): int(round((t - t0) / grid.dt)) for t in snapshot_times}
    if band is None:
        band = protocol.default_band(events, medium)

    _, weights, pump = transverse_shells(grid.n_r, rho)
    signal = protocol.signal_event(events)
    sims = []
    for r in range(grid.n_r):
        scale = [1.0 if ev is signal else pump[r] for ev in events]
        sims.append(simulate(medium, grid, events, t0, n, coupling, scale=scale,
                             snapshot_steps=snap_steps.values(),
                             record_profiles=record_profiles, band=band, workers=workers))
    if grid.n_r == 1:
        sim = sims[0]
        trace, nb_line = sim.trace, sim.nb_line
    else:
        trace, nb_line = _combine_shells(sims, weights)
    snapshots = {}
    for t, k in snap_steps.items():
        states = [s.snapshots[k] for s in sims if k in s.snapshots]
        if states:
            st = states[0]
            snapshots[t] = EnsembleState(np.concatenate([s.s for s in states]),
                                         np.concatenate([s.w for s in states]),
                                         st.phases, st.time, st.weights)
    result = protocol.analyze(trace, nb_line, events, windows, medium,
                              snapshots=snapshots, geometry=getattr(schedule, "geometry", None),
                              kind=getattr(schedule, "kind", None), shell_weights=weights,
                              detunings=grid.detunings(medium))
    result.shells = sims if grid.n_r > 1 else None
    return trace, snapshots, result


def _combine_shells(sims, weights):
    # Intensities are averaged with the signal weights; the stored complex
    # envelope carries the square root so |fwd_out|^2 is the weighted mean.
    tr0 = sims[0].trace
    def avg_intensity(get):
        return np.sqrt(sum(wt * np.abs(get(s.trace)) ** 2 for s, wt in zip(sims, weights)))
    trace = FieldTrace(tr0.times,
                       avg_intensity(lambda t: t.fwd_out).astype(complex),
                       avg_intensity(lambda t: t.bwd_out).astype(complex),
                       tr0.fwd_in, tr0.bwd_in)
    nb_line = sum(wt * s.nb_line for s, wt in zip(sims, weights))
    return trace, nb_line
