import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rose import DetectWindow, MediumSpec, Schedule
from rose.errors import InvalidInputError, InvalidWindowError, SemanticError
from rose.propagation import FieldTrace
from rose.protocol import (default_windows, echo_direction, efficiency_backward,
                           efficiency_forward, inversion_from_gain, measure_efficiency,
                           peak_time, predict_echo_times, schedule_duration, se_snr_proxy)
from rose.pulses import BWD, FWD, ChsParams, GaussianParams, PulseEvent, RectParams


def sig(t=0.0, fwhm=3e-6):
    return PulseEvent("gaussian", GaussianParams(fwhm, 0.05 * math.pi, t), FWD)


def chs(t, d=BWD):
    return PulseEvent("chs", ChsParams(0.8e6, 1.25e5, 10, t), d)


def rose(t12, t23, geometry="counterprop"):
    return Schedule((sig(), chs(t12), chs(t12 + t23)), geometry, "rose")


def test_two_pulse_prediction():
    s = Schedule((sig(), chs(10e-6)), "counterprop", "2pe")
    assert dict(predict_echo_times(s)) == {"2PE": pytest.approx(20e-6)}


def test_rose_prediction_82us():
    assert dict(predict_echo_times(rose(20.5e-6, 41e-6)))["ROSE"] == pytest.approx(82e-6)


def test_three_pulse_vs_rose_disambiguation():
    p = dict(predict_echo_times(rose(10e-6, 30e-6)))
    assert p["3PE"] == pytest.approx(50e-6)
    assert p["ROSE"] == pytest.approx(60e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 30e-6), st.floats(1e-6, 30e-6))
def test_rose_time_independent_of_t2(t2a, t2b):
    t23 = 61e-6
    a = dict(predict_echo_times([sig(), chs(t2a), chs(t2a + t23)]))["ROSE"]
    b = dict(predict_echo_times([sig(), chs(t2b), chs(t2b + t23)]))["ROSE"]
    assert a == pytest.approx(b, abs=1e-15)


def test_rect_pulse_times_are_centres():
    ev = [sig(), PulseEvent("rect", RectParams(1e-6, math.pi, 9.5e-6), FWD)]
    assert dict(predict_echo_times(ev))["2PE"] == pytest.approx(20e-6)


def test_forward_efficiency_values():
    assert efficiency_forward(2, 0, math.inf) == pytest.approx(4 * math.exp(-2))
    assert efficiency_forward(2, 0, math.inf) == pytest.approx(0.541, abs=1e-3)
    assert efficiency_forward(1.05, 13e-6, 42e-6) == pytest.approx(0.112, abs=1e-3)
    assert efficiency_forward(0.71, 41e-6, 230e-6) == pytest.approx(0.122, abs=1e-3)


def test_forward_efficiency_argmax():
    a = np.linspace(0.01, 5, 500)
    eta = [efficiency_forward(x) for x in a]
    step = a[1] - a[0]
    assert abs(a[int(np.argmax(eta))] - 2.0) <= step


def test_backward_efficiency():
    assert efficiency_backward(math.inf) == 1.0
    assert efficiency_backward(0.0) == 0.0
    assert efficiency_backward(0.71) == pytest.approx(0.258, abs=1e-3)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 20))
def test_backward_beats_forward(aL):
    assert efficiency_backward(aL) >= efficiency_forward(aL) - 1e-15


def test_inversion_from_gain():
    assert inversion_from_gain(3.55, 0.71) == pytest.approx(0.892, abs=1e-3)
    assert inversion_from_gain(math.exp(2 * 0.71), 0.71) == pytest.approx(1.0)
    assert inversion_from_gain(1.0, 0.71) == 0.0
    with pytest.raises(InvalidInputError):
        inversion_from_gain(0.0, 0.71)


def test_snr_proxy():
    assert se_snr_proxy(1.0, 0.1) == 10
    assert se_snr_proxy(1.0, 1.0) == 1
    assert se_snr_proxy(n_b_rose=0.05) >= 10


def trace_with(env_in, env_out, t):
    z = np.zeros_like(t, complex)
    return FieldTrace(t, env_out, z, env_in, z)


def test_measure_efficiency_basic():
    t = np.arange(0, 80e-6, 1e-8)
    s = sig(10e-6)
    env = s.envelope(t)
    echo = sig(40e-6).envelope(t)
    w = DetectWindow("echo", 40e-6, 30e-6)
    assert measure_efficiency(trace_with(env, echo, t), s, w) == pytest.approx(1.0, rel=1e-9)
    assert measure_efficiency(trace_with(env, 0 * echo, t), s, w) == 0.0
    tr = trace_with(env, echo * np.exp(0.7j), t)
    assert measure_efficiency(tr, s, w) == pytest.approx(1.0, rel=1e-9)
    assert peak_time(tr, w) == pytest.approx(40e-6, abs=1e-9)


def test_window_errors():
    t = np.arange(0, 60e-6, 1e-8)
    s = sig(10e-6)
    tr = trace_with(s.envelope(t), s.envelope(t), t)
    a = DetectWindow("a", 30e-6, 10e-6)
    b = DetectWindow("b", 34e-6, 10e-6)
    with pytest.raises(InvalidWindowError):
        measure_efficiency(tr, s, a, [a, b])
    with pytest.raises(InvalidWindowError):
        DetectWindow("empty", 30e-6, 0.0)
    with pytest.raises(InvalidWindowError):
        measure_efficiency(tr, s, DetectWindow("far", 1.0, 1e-6))


def test_schedule_rules():
    with pytest.raises(SemanticError, match="t3>te"):
        rose(20e-6, 15e-6).validate()
    with pytest.raises(SemanticError, match="pulse-order"):
        Schedule((sig(), chs(20e-6), chs(10e-6))).validate()
    with pytest.raises(SemanticError, match="pulse-count"):
        Schedule((sig(), chs(20e-6)), kind="rose").validate()
    rose(20.5e-6, 41e-6).validate()


def test_echo_directions():
    assert echo_direction(rose(20e-6, 41e-6), "2PE") == -1
    assert echo_direction(rose(20e-6, 41e-6), "ROSE") == +1
    s = Schedule((sig(), chs(20e-6, FWD), chs(61e-6, FWD)), "coprop")
    assert echo_direction(s, "2PE") == +1
    b = Schedule((sig(), chs(20e-6, FWD), chs(61e-6, FWD)), "backward-60deg")
    assert echo_direction(b, "ROSE") == -1


def test_default_windows_do_not_overlap():
    ws = default_windows(Schedule((sig(fwhm=3.5e-6), chs(6.5e-6), chs(19.5e-6))))
    assert [w.label for w in ws] == ["2pe", "rose"]
    assert all(w.direction == FWD for w in ws)
    a, b = ws
    assert a.t_end <= b.t_start + 1e-15
    assert b.t_center == pytest.approx(26e-6)


def test_default_window_width():
    ws = default_windows(rose(20.5e-6, 41e-6))
    assert ws[1].width == pytest.approx(4 * 3e-6)


def test_schedule_duration_counts_windows():
    s = rose(20.5e-6, 41e-6)
    ws = default_windows(s)
    assert schedule_duration(s.events, ws) == pytest.approx(88e-6)
    assert schedule_duration(s.events) == pytest.approx(61.5e-6)
