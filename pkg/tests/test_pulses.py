import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rose import MediumSpec
from rose.errors import InvalidInputError
from rose.pulses import (ChsParams, GaussianParams, PulseEvent, RectParams, adiabaticity,
                         chirp_rate_max, chs_envelope, chs_instantaneous_frequency,
                         gaussian_envelope, pulse_energies, rect_envelope,
                         refocusing_parameter)

ER = ChsParams(Omega0=3.5e6, beta=1.25e5, mu=10, t0=0.0)
TM = ChsParams(Omega0=1.7e6, beta=2 * math.pi * 120e3, mu=2, t0=0.0)


def test_chs_center():
    assert abs(chs_envelope(ER, 0.0)) == pytest.approx(3.5e6)
    assert chs_instantaneous_frequency(ER, 0.0) == 0.0


def test_chirp_spans():
    assert ER.span == pytest.approx(2.5e6)
    assert ER.span / (2 * math.pi) == pytest.approx(400e3, rel=0.01)
    assert TM.mu * TM.beta / math.pi == pytest.approx(480e3)


def test_chirp_rate():
    assert chirp_rate_max(ER) == pytest.approx(1.5625e11)
    assert chirp_rate_max(ChsParams(1e6, 1e5, 0.0, 0.0)) == 0.0
    assert chirp_rate_max(TM) == pytest.approx(1.137e12, rel=1e-3)


def test_adiabaticity():
    assert adiabaticity(ER) == pytest.approx(0.01276, rel=1e-3)
    assert adiabaticity(ChsParams(1e12, 1.25e5, 10, 0.0)) < 1e-10
    p = ChsParams(math.sqrt(1.5625e11), 1.25e5, 10, 0.0)
    assert adiabaticity(p) == pytest.approx(1.0)


def test_refocusing_parameter():
    assert refocusing_parameter(ER, 3e-6) == pytest.approx(4.47, rel=2e-3)
    assert refocusing_parameter(TM, 3.5e-6) == pytest.approx(0.45, rel=0.01)
    assert refocusing_parameter(TM, 3.5e-6) < 1
    assert refocusing_parameter(ER, math.inf) == 0.0


def test_envelope_magnitude_and_support():
    t = np.linspace(-10e-5, 10e-5, 20001)
    env = chs_envelope(ER, t)
    lo, hi = ER.support
    inside = (t >= lo) & (t <= hi)
    np.testing.assert_allclose(np.abs(env[inside]), 3.5e6 / np.cosh(1.25e5 * t[inside]), rtol=1e-12)
    assert np.all(env[~inside] == 0)
    assert (lo, hi) == pytest.approx((-6 / 1.25e5, 6 / 1.25e5))


def test_phase_derivative_is_instantaneous_frequency():
    p = ChsParams(3.5e6, 1.25e5, 10, 2e-6, carrier_offset=3e5)
    h = 1e-3 / p.beta
    t = np.arange(-4 / p.beta, 4 / p.beta, h) + p.t0
    phase = np.unwrap(np.angle(chs_envelope(p, t)))
    # the drive carries exp(-i integral(omega)), see the module docstring
    freq = -np.gradient(phase, h)
    ref = chs_instantaneous_frequency(p, t)
    scale = np.max(np.abs(ref))
    err = np.abs(freq - ref)[2:-2] / scale
    assert err.max() < 1e-6


def test_phase_continuous_in_support():
    t = np.linspace(*ER.support, 200001)[1:-1]
    ph = np.unwrap(np.angle(chs_envelope(ER, t)))
    assert np.max(np.abs(np.diff(ph))) < 0.05


def test_rect_and_gaussian_area():
    r = RectParams(1e-6, math.pi, 0.0)
    assert r.amplitude == pytest.approx(math.pi * 1e6)
    t = np.linspace(-1e-6, 2e-6, 300001)
    assert np.trapezoid(rect_envelope(r, t).real, t) == pytest.approx(math.pi, rel=1e-4)
    g = GaussianParams(3.5e-6, 0.3, 1e-6)
    t = np.linspace(-40e-6, 40e-6, 400001)
    assert np.trapezoid(gaussian_envelope(g, t).real, t) == pytest.approx(0.3, rel=1e-9)


def test_zero_area_gaussian_is_zero():
    g = GaussianParams(3.5e-6, 0.0, 0.0)
    assert np.all(gaussian_envelope(g, np.linspace(-1e-5, 1e-5, 11)) == 0)


def test_gaussian_fwhm_of_intensity():
    g = GaussianParams(3.5e-6, 1.0, 0.0)
    t = np.linspace(-10e-6, 10e-6, 200001)
    i = np.abs(gaussian_envelope(g, t)) ** 2
    above = t[i >= 0.5 * i.max()]
    assert above[-1] - above[0] == pytest.approx(3.5e-6, rel=1e-3)


def test_energy_ratio():
    med = MediumSpec(alphaL=1.0, L=7.5e-3)
    w_in, w_at, ratio = pulse_energies(ER, med, 1e-8)
    assert ratio == pytest.approx(8.1e-3, rel=0.01)
    assert ratio == pytest.approx((2 / math.pi) * adiabaticity(ER) * 1.0, rel=1e-12)
    assert w_at / w_in == pytest.approx(ratio, rel=1e-12)
    assert pulse_energies(ChsParams(3.5e6, 1.25e5, 0, 0), med, 1e-8)[2] == 0
    double = pulse_energies(ER, MediumSpec(alphaL=2.0, L=7.5e-3), 1e-8)[2]
    assert double == pytest.approx(2 * ratio, rel=1e-12)


def test_energy_ratio_in_joules_matches():
    med = MediumSpec(alphaL=1.0, L=7.5e-3)
    w_in, w_at, ratio = pulse_energies(ER, med, 1e-8, dipole=1e-32)
    assert ratio == pytest.approx((2 / math.pi) * adiabaticity(ER), rel=1e-9)


def test_energy_ratio_needs_area():
    with pytest.raises(InvalidInputError):
        pulse_energies(ER, MediumSpec(1.0, 1e-3), 0.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(1e5, 1e7), st.floats(1e4, 1e6), st.floats(0.5, 20))
def test_energy_ratio_scaling(s, om, beta, mu):
    med = MediumSpec(alphaL=0.7, L=1e-3)
    p = ChsParams(om, beta, mu, 0.0)
    q = ChsParams(s * om, beta, mu * s**2, 0.0)
    assert pulse_energies(q, med, 1.0)[2] == pytest.approx(pulse_energies(p, med, 1.0)[2], rel=1e-9)


def test_truncated_energy_close_to_analytic():
    t = np.linspace(*ER.support, 400001)
    num = np.trapezoid(np.abs(chs_envelope(ER, t)) ** 2, t)
    assert abs(num - 2 * ER.Omega0**2 / ER.beta) / num < 1e-4


@pytest.mark.parametrize("bad", [
    dict(Omega0=0, beta=1, mu=1, t0=0), dict(Omega0=1, beta=-1, mu=1, t0=0),
    dict(Omega0=1, beta=1, mu=-1, t0=0), dict(Omega0=1, beta=1, mu=1, t0=0, truncation=0),
])
def test_chs_invariants(bad):
    with pytest.raises(InvalidInputError):
        ChsParams(**bad)


def test_pulse_event_checks():
    with pytest.raises(InvalidInputError):
        PulseEvent("chs", RectParams(1e-6, 1.0, 0.0))
    with pytest.raises(InvalidInputError):
        PulseEvent("rect", RectParams(1e-6, 1.0, 0.0), direction=2)
    e = PulseEvent("rect", RectParams(1e-6, 1.0, 2e-6))
    assert e.time == 2e-6 and e.center == pytest.approx(2.5e-6)
