import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rose import EnsembleGrid, EnsembleState, MediumSpec
from rose.ensemble import (grating_orders, local_drive, polarization_projection,
                           transverse_average, transverse_shells)
from rose.errors import ConfigurationError, InvalidInputError

PHI = 2 * math.pi * np.arange(8) / 8


def state_from(s_phi, n_det=3):
    s = np.broadcast_to(np.asarray(s_phi, complex), (1, 1, n_det, len(s_phi))).copy()
    return EnsembleState(s, -np.ones(s.shape, float), PHI[:len(s_phi)])


def test_local_drive():
    assert local_drive(0.0, 2.0 + 1j, 0.0) == 2.0 + 1j
    np.testing.assert_allclose(local_drive(PHI, 1.5, 1.5), 3.0 * np.cos(PHI), atol=1e-15)


def dominant_order(s_phi):
    m = int(np.argmax(np.abs(grating_orders(s_phi))))
    return m if m <= 4 else m - 8


def test_backward_drive_bookkeeping():
    back = local_drive(PHI, 0.0, 1.0)
    np.testing.assert_allclose(back, np.exp(-1j * PHI))
    # an ideal rephasing pulse maps s -> Omega^2 s* / |Omega|^2
    s = np.exp(1j * PHI)                    # signal along +z
    s = back**2 * np.conj(s)                # first backward pulse
    assert dominant_order(s) == -3
    s = back**2 * np.conj(s)                # second backward pulse
    assert dominant_order(s) == +1


def test_projection_orders():
    assert polarization_projection(state_from(np.ones(8)), 0, +1) == pytest.approx(0, abs=1e-15)
    st_ = state_from(0.3 * np.exp(1j * PHI))
    assert polarization_projection(st_, 0, +1) == pytest.approx(0.3)
    assert abs(polarization_projection(st_, 0, -1)) < 1e-15


def test_minus_three_grating_is_exactly_silent():
    st_ = state_from(np.exp(-3j * PHI))
    assert abs(polarization_projection(st_, 0, +1)) < 1e-15
    assert abs(polarization_projection(st_, 0, -1)) < 1e-15


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 8), elements=st.floats(-1, 1)))
def test_bessel_bound(a):
    s = a[0] + 1j * a[1]
    st_ = state_from(s, n_det=1)
    tot = sum(abs(polarization_projection(st_, 0, m)) ** 2 for m in range(-3, 5))
    assert tot <= np.mean(np.abs(s) ** 2) + 1e-12
    c = grating_orders(s)
    assert np.sum(np.abs(c) ** 2) == pytest.approx(np.mean(np.abs(s) ** 2), abs=1e-12)


def test_ground_state_shape():
    g = EnsembleGrid(n_z=4, n_det=11, n_phi=8, n_r=2)
    st_ = EnsembleState.ground(g)
    assert st_.n_cells == 4 * 11 * 8 * 2
    assert np.all(st_.n_b == 0)


def test_grid_invariants():
    with pytest.raises(ConfigurationError):
        EnsembleGrid(n_phi=6)
    med = MediumSpec(1.0, 1e-3, inhom_halfwidth=2e6)
    g = EnsembleGrid(n_det=101)
    det = g.detunings(med)
    np.testing.assert_allclose(det, -det[::-1])
    assert g.detuning_weights(med).sum() == pytest.approx(1.0)
    g.check(med, 1e-6)
    with pytest.raises(ConfigurationError, match="detuning spacing"):
        g.check(med, 1e-4)
    with pytest.raises(ConfigurationError, match="chirp"):
        g.check(med, 1e-6, max_span=3e6)


def test_medium_invariants():
    with pytest.raises(InvalidInputError):
        MediumSpec(-1.0, 1e-3)
    with pytest.raises(InvalidInputError):
        MediumSpec(1.0, 0.0)
    assert MediumSpec(0.71, 7.5e-3).alpha == pytest.approx(0.71 / 7.5e-3)


def test_transverse_average():
    assert transverse_average([0.42]) == 0.42
    r, w, pump = transverse_shells(5, math.inf)
    assert np.all(pump == 1) and w.sum() == pytest.approx(1)
    assert transverse_average(np.full(5, 0.3), rho=math.inf) == pytest.approx(0.3)
    _, _, pump = transverse_shells(5, 2.5)
    assert np.all(np.diff(pump) < 0) and pump[0] < 1


def test_gauss_laguerre_weights_integrate_signal_profile():
    # mean of r^2 under e^{-2r^2} r dr is 1/2 (w_s = 1)
    r, w, _ = transverse_shells(6, math.inf)
    assert np.dot(w, r**2) == pytest.approx(0.5, rel=1e-12)
