import math

import numpy as np
import pytest

from rose import EnsembleGrid, MediumSpec, PulseEvent
from rose.bloch import AtomState, evolve
from rose.ensemble import grating_orders, polarization_projection
from rose.errors import ConfigurationError, InvalidInputError, StepSizeError
from rose.propagation import (calibrate_coupling, gain_check, nominal_coupling,
                              pi_pulse_attenuation, probe_transmission, run_schedule,
                              simulate)
from rose.protocol import Schedule, default_windows
from rose.pulses import BWD, FWD, ChsParams, GaussianParams, RectParams, envelope, pulse_energies

GRID = EnsembleGrid(n_z=32, n_det=201, n_phi=8, dt=1e-8)


def medium(alphaL, W=2e6, L=1e-3, **kw):
    return MediumSpec(alphaL, L, inhom_halfwidth=W, **kw)


@pytest.mark.parametrize("alphaL", [0.5, 1.0, 2.0])
def test_beer_law_with_nominal_coupling(alphaL):
    # no calibration: the continuum coupling alone must reproduce Beer's law
    m = medium(alphaL)
    T = probe_transmission(m, GRID, nominal_coupling(m, GRID))
    assert T == pytest.approx(math.exp(-alphaL), rel=5e-3)


def test_transparent_medium():
    m = medium(0.0)
    assert calibrate_coupling(m, GRID) == 0.0
    assert probe_transmission(m, GRID, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_calibrated_coupling_close_to_nominal():
    m = medium(1.0)
    assert calibrate_coupling(m, GRID) / nominal_coupling(m, GRID) == pytest.approx(1.0, abs=1e-3)


def test_inverted_medium_gain(er_medium):
    assert gain_check(er_medium, GRID) == pytest.approx(math.exp(2 * 0.71), rel=0.02)


def _mixed_events():
    return [PulseEvent("gaussian", GaussianParams(0.4e-6, 0.6 * math.pi, 0.0), FWD),
            PulseEvent("rect", RectParams(0.3e-6, 0.8 * math.pi, 0.5e-6), BWD)]


def test_kernel_matches_single_atom_oracle_without_coupling():
    m = medium(1.0, W=3e6, T2=20e-6, T1=100e-6)
    g = EnsembleGrid(n_z=2, n_det=21, n_phi=8, dt=5e-9)
    events = _mixed_events()
    t0, n = -1.2e-6, 520
    sim = simulate(m, g, events, t0, n, 0.0, snapshot_steps=[n])
    st = sim.snapshots[n]
    det = g.detunings(m)
    for j, phi in enumerate(st.phases):
        def drive(t, phi=phi):
            fwd = envelope(events[0].params, t)
            bwd = envelope(events[1].params, t)
            return fwd * np.exp(1j * phi) + bwd * np.exp(-1j * phi)
        ref = evolve(AtomState.ground(det.shape), det, drive, t0, t0 + n * g.dt,
                     m.T1, m.T2, g.dt)
        np.testing.assert_allclose(st.s[0, 0, :, j], ref.s, atol=1e-12)
        np.testing.assert_allclose(st.w[0, 0, :, j], ref.w, atol=1e-12)


def test_symmetric_phase_reduction_is_exact():
    m = medium(0.5, W=3e6)
    g = EnsembleGrid(n_z=8, n_det=41, n_phi=8, dt=5e-9)
    c = calibrate_coupling(m, g)
    half = simulate(m, g, _mixed_events(), -1.2e-6, 520, c, snapshot_steps=[520])
    full = simulate(m, g, _mixed_events(), -1.2e-6, 520, c, snapshot_steps=[520], symmetric=False)
    for a, b in ((half.trace.fwd_out, full.trace.fwd_out), (half.trace.bwd_out, full.trace.bwd_out)):
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))
    np.testing.assert_allclose(half.snapshots[520].s, full.snapshots[520].s, atol=1e-12)


def test_partition_independence():
    m = medium(1.0, W=3e6)
    g = EnsembleGrid(n_z=10, n_det=41, n_phi=8, dt=5e-9)
    c = calibrate_coupling(m, g)
    runs = [simulate(m, g, _mixed_events(), -1.2e-6, 520, c, workers=k) for k in (1, 2, 5)]
    for r in runs[1:]:
        assert np.max(np.abs(r.trace.fwd_out - runs[0].trace.fwd_out)) <= 1e-12
        assert np.max(np.abs(r.trace.bwd_out - runs[0].trace.bwd_out)) <= 1e-12
        assert np.max(np.abs(r.nb_line - runs[0].nb_line)) <= 1e-12


def rect_rose(geometry, alphaL=0.05):
    d = BWD if geometry == "counterprop" else FWD
    ev = (PulseEvent("gaussian", GaussianParams(2e-6, 0.05 * math.pi, 0.0), FWD),
          PulseEvent("rect", RectParams(0.5e-6, math.pi, 4.75e-6), d),
          PulseEvent("rect", RectParams(0.5e-6, math.pi, 14.75e-6), d))
    return medium(alphaL, W=5e6), Schedule(ev, geometry, "rose")


def test_minus_three_grating_carries_the_stored_coherence():
    m, sched = rect_rose("counterprop")
    g = EnsembleGrid(n_z=8, n_det=401, n_phi=8, dt=1e-8)
    t_mid = 10e-6        # primary echo time, between the rephasing pulses
    _, snaps, _ = run_schedule(m, g, sched, default_windows(sched)[:1], [t_mid],
                               t_span=(-6e-6, 12e-6))
    st = snaps[t_mid]
    wt = g.detuning_weights(m)
    c = grating_orders(st.s)                    # (r, z, det, m)
    # order -3 is the dominant rephased component
    rephased = np.abs(np.einsum("zd,d->z", c[0, :, :, -3], wt))
    assert rephased.min() > 1e-3
    # removing it leaves both projections unchanged to round-off
    stripped = st.s - c[..., -3:-2] * np.exp(-3j * st.phases)
    for z in range(g.n_z):
        for order in (+1, -1):
            full = polarization_projection(st, z, order, wt)
            st2 = type(st)(stripped, st.w, st.phases, st.time, st.weights)
            assert abs(full - polarization_projection(st2, z, order, wt)) <= 1e-10 * rephased[z]


def test_forward_energy_bookkeeping():
    # energy lost by a forward-only field equals the energy taken up by atoms
    m = medium(0.2, W=2.5e6, L=7.5e-3)
    g = EnsembleGrid(n_z=32, n_det=801, n_phi=8, dt=1e-8)
    p = ChsParams(3.5e6, 1.25e5, 10.0, 0.0)
    ev = PulseEvent("chs", p, FWD)
    k = calibrate_coupling(m, g)
    lo, hi = p.support
    n = int(math.ceil((hi - lo) / g.dt))
    sim = simulate(m, g, [ev], lo, n, k, snapshot_steps=[n])
    st = sim.snapshots[n]
    nb = np.einsum("rzdp,d->z", st.n_b, g.detuning_weights(m)) / st.n_b.shape[-1]
    tr = sim.trace
    f_in = np.trapezoid(np.abs(tr.fwd_in) ** 2, dx=g.dt)
    f_out = np.trapezoid(np.abs(tr.fwd_out) ** 2, dx=g.dt)
    assert (f_in - f_out) / (2 * k * nb.sum()) == pytest.approx(1.0, rel=0.02)
    # and the absorbed fraction follows the pulse energy budget
    absorbed = 2 * k * nb.sum() / f_in
    assert absorbed == pytest.approx(pulse_energies(p, m, 1.0)[2], rel=0.1)


def test_pi_pulse_rejects_zero_area():
    m = medium(3.0, W=3e7)
    with pytest.raises(InvalidInputError):
        pi_pulse_attenuation(m, GRID, 1e-6, area=0.0)


def test_pi_pulse_needs_wide_line():
    with pytest.raises(ConfigurationError):
        pi_pulse_attenuation(medium(3.0, W=2e6), GRID, 1e-6)


def test_step_size_guard():
    m = medium(1.0, W=2e6)
    ev = PulseEvent("rect", RectParams(0.1e-6, 4 * math.pi, 0.0), FWD)
    with pytest.raises(StepSizeError) as exc:
        simulate(m, GRID, [ev], 0.0, 20, 1.0)
    assert 0 < exc.value.suggested_dt < GRID.dt

