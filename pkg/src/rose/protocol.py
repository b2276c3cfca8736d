"""Echo schedules, timing rules, efficiency laws and run analysis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .bloch import edge_width
from .errors import InvalidInputError, InvalidWindowError, SemanticError
from .pulses import BWD, FWD, ChsParams, GaussianParams, PulseEvent

GEOMETRIES = ("coprop", "counterprop", "backward-60deg")
KINDS = ("probe", "2pe", "3pe", "rose", "custom")


@dataclass(frozen=True)
class DetectWindow:
    """Integration window on one face (``direction`` +1: z=L, -1: z=0).

    ``kind="population"`` windows instead sample the upper-level population
    at ``t_center``.
    """

    label: str
    t_center: float
    width: float
    direction: int = FWD
    kind: str = "field"

    def __post_init__(self):
        if self.kind not in ("field", "population"):
            raise InvalidWindowError(f"unknown window kind {self.kind!r}")
        if self.kind == "field" and not self.width > 0:
            raise InvalidWindowError(f"window {self.label!r} is empty")

    @property
    def t_start(self) -> float:
        return self.t_center - 0.5 * self.width

    @property
    def t_end(self) -> float:
        return self.t_center + 0.5 * self.width


@dataclass(frozen=True)
class Schedule:
    events: tuple
    geometry: str = "counterprop"
    kind: str = "rose"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.geometry not in GEOMETRIES:
            raise InvalidInputError(f"unknown geometry {self.geometry!r}")
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")

    @property
    def times(self) -> list[float]:
        return [e.time for e in self.events]

    def validate(self) -> None:
        t = self.times
        for a, b in zip(t, t[1:]):
            if not a < b:
                raise SemanticError("pulse-order", f"pulse times must increase (t={a:g} then {b:g})")
        need = {"2pe": 2, "3pe": 3, "rose": 3}.get(self.kind, 1)
        if len(t) < need:
            raise SemanticError("pulse-count", f"{self.kind} needs {need} pulses, got {len(t)}")
        if self.kind == "rose":
            t1, t2, t3 = [e.center for e in self.events[:3]]
            te = t1 + 2 * (t2 - t1)
            if not t3 > te:
                raise SemanticError(
                    "t3>te", f"second rephasing pulse at {t3:g} s must follow the primary "
                             f"echo at t1+2*t12 = {te:g} s")


@dataclass
class RunResult:
    """Observables of one run.

    Echo energies are ``integral |Omega|^2 dt`` (rad^2/s), i.e. proportional
    to pulse energy with the common factor ``A c eps0 (hbar/d)^2 / 2``.
    """

    echo_times: dict = field(default_factory=dict)
    echo_energies: dict = field(default_factory=dict)
    efficiencies: dict = field(default_factory=dict)
    efficiency: float = 0.0
    input_energy: float = 0.0
    n_b_timeline: tuple = ()
    populations: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    n_b_after_chs1: float | None = None
    n_b_after_chs2: float | None = None
    analytic_prediction: float | None = None
    snr_proxy: float | None = None
    predicted_times: dict = field(default_factory=dict)
    transmissions: dict = field(default_factory=dict)
    gain: float | None = None
    n_b_from_gain: float | None = None
    edge_widths: dict = field(default_factory=dict)
    shells: list | None = None

    def summary(self) -> dict:
        out = {"efficiency": self.efficiency}
        main = _main_label(self.echo_times)
        if main is not None:
            out["echo_time_s"] = self.echo_times[main]
        out["n_b_after_chs1"] = self.n_b_after_chs1
        out["n_b_after_chs2"] = self.n_b_after_chs2
        out["analytic_efficiency"] = self.analytic_prediction
        out["snr_proxy"] = self.snr_proxy
        for k, v in self.efficiencies.items():
            out[f"efficiency.{k}"] = v
        for k, v in self.echo_times.items():
            out[f"echo_time.{k}"] = v
        for k, v in self.populations.items():
            out[f"n_b.{k}"] = v
        for k, v in self.edge_widths.items():
            out[f"edge_width_hz.{k}"] = v / (2 * math.pi)
        for k, v in self.transmissions.items():
            out[f"transmission.{k}"] = v
        if self.gain is not None:
            out["gain"] = self.gain
            out["n_b_from_gain"] = self.n_b_from_gain
        return out


def _main_label(d: dict):
    if not d:
        return None
    return "rose" if "rose" in d else next(iter(d))


def predict_echo_times(schedule) -> list[tuple[str, float]]:
    """Echo times implied by the first two or three pulses.

    2PE at ``t1 + 2 t12``; with a third pulse also ROSE at ``t1 + 2 t23``
    and the stimulated (three-pulse) echo at ``t1 + t23 + 2 t12``.  Pulse
    times are centres.
    """
    events = schedule.events if hasattr(schedule, "events") else schedule
    # a rect pulse acts around its middle, not its leading edge
    t = [e.center for e in events]
    out = []
    if len(t) >= 2:
        t1, t2 = t[0], t[1]
        out.append(("2PE", t1 + 2 * (t2 - t1)))
    if len(t) >= 3:
        t1, t2, t3 = t[:3]
        out.append(("ROSE", t1 + 2 * (t3 - t2)))
        out.append(("3PE", t1 + (t3 - t2) + 2 * (t2 - t1)))
    return out


def efficiency_forward(alphaL: float, t23: float = 0.0, T2: float = math.inf) -> float:
    """(alphaL)^2 exp(-alphaL - 4 t23 / T2)."""
    decay = 0.0 if math.isinf(T2) else 4.0 * t23 / T2
    return alphaL**2 * math.exp(-alphaL - decay)


def efficiency_backward(alphaL: float) -> float:
    """(1 - exp(-alphaL))^2 for retrieval opposite to the signal."""
    if math.isinf(alphaL):
        return 1.0
    return (1.0 - math.exp(-alphaL)) ** 2


def window_energy(trace, window: DetectWindow) -> float:
    if window.t_end <= window.t_start:
        raise InvalidWindowError(f"window {window.label!r} is empty")
    t = trace.times
    m = (t >= window.t_start) & (t <= window.t_end)
    if m.sum() < 2:
        raise InvalidWindowError(f"window {window.label!r} lies outside the trace")
    return float(np.trapezoid(np.abs(trace.output(window.direction)[m]) ** 2, t[m]))


def input_energy(trace, pulse: PulseEvent) -> float:
    """Energy of ``pulse`` as injected at its entrance face."""
    env = pulse.envelope(trace.times)
    return float(np.trapezoid(np.abs(env) ** 2, trace.times))


def measure_efficiency(trace, pulse: PulseEvent, window: DetectWindow,
                       others=()) -> float:
    """Echo energy in ``window`` over the input energy of ``pulse``.

    ``others`` are further windows the echo window must not overlap.
    """
    for o in others:
        if o is not window and o.kind == "field" and o.direction == window.direction:
            if o.t_start < window.t_end and window.t_start < o.t_end:
                raise InvalidWindowError(f"windows {window.label!r} and {o.label!r} overlap")
    e_in = input_energy(trace, pulse)
    if e_in <= 0:
        raise InvalidInputError("input pulse carries no energy")
    return window_energy(trace, window) / e_in


def peak_time(trace, window: DetectWindow) -> float:
    """Time of maximum |Omega|^2 inside the window, refined by a parabola."""
    t = trace.times
    m = np.nonzero((t >= window.t_start) & (t <= window.t_end))[0]
    if m.size < 3:
        raise InvalidWindowError(f"window {window.label!r} lies outside the trace")
    p = np.abs(trace.output(window.direction)[m]) ** 2
    i = int(np.argmax(p))
    if 0 < i < m.size - 1:
        y0, y1, y2 = p[i - 1], p[i], p[i + 1]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        return float(t[m[i]] + off * (t[1] - t[0]))
    return float(t[m[i]])


def inversion_from_gain(gain: float, alphaL: float) -> float:
    """Upper-level population from a probe amplification factor.

    ``gain`` is the transmission after inversion divided by the transmission
    before it, so ``n_b = ln(gain) / (2 alphaL)``, clamped to [0, 1].
    """
    if not gain > 0:
        raise InvalidInputError("gain must be positive")
    if not alphaL > 0:
        raise InvalidInputError("alphaL must be positive")
    return min(1.0, max(0.0, math.log(gain) / (2.0 * alphaL)))


def se_snr_proxy(n_b_2pe: float = 1.0, n_b_rose: float = 1.0) -> float:
    """Spontaneous-emission noise improvement: ratio of excited populations."""
    if not n_b_rose > 0:
        return math.inf
    return n_b_2pe / n_b_rose


def signal_event(events):
    """First gaussian of the schedule, or None for a pulses-only run."""
    for e in events:
        if isinstance(e.params, GaussianParams):
            return e
    return None


def rephasing_events(events):
    sig = signal_event(events)
    return [e for e in events if e is not sig]


def signal_fwhm(events) -> float | None:
    sig = signal_event(events)
    return None if sig is None else sig.params.fwhm


def default_band(events, medium) -> float:
    """Detuning half-width over which n_b is averaged: the signal bandwidth."""
    fw = signal_fwhm(events)
    if fw is not None:
        return min(2.0 * math.log(2.0) / fw, medium.inhom_halfwidth)
    spans = [e.params.mu * e.params.beta for e in events if isinstance(e.params, ChsParams)]
    return 0.5 * max(spans) if spans else medium.inhom_halfwidth


def default_windows(schedule, width: float | None = None) -> list[DetectWindow]:
    """Echo windows centred on the predicted times, +-2 signal FWHM wide.

    Windows on the same face are narrowed to the spacing of their centres so
    they never overlap.  A silenced echo is watched on the signal face,
    which is where the matched geometry would put it.
    """
    events = list(schedule.events)
    fw = signal_fwhm(events)
    if width is None:
        width = 4.0 * fw if fw else 4.0 * (events[1].support[1] - events[1].support[0])
    pred = dict(predict_echo_times(schedule))
    kind = schedule.kind
    wanted = []
    if kind in ("2pe", "rose") and "2PE" in pred:
        d = echo_direction(schedule, "2PE")
        wanted.append(("2pe", pred["2PE"], d if d == FWD or kind == "2pe" else FWD))
    if kind == "rose":
        d = echo_direction(schedule, "ROSE")
        wanted.append(("rose", pred["ROSE"], d if d else FWD))
    if kind == "3pe" and "3PE" in pred:
        wanted.append(("3pe", pred["3PE"], FWD))
    out = []
    for label, tc, d in wanted:
        gaps = [abs(tc - t) for lab, t, dd in wanted if lab != label and dd == d]
        w = min([width] + gaps)
        out.append(DetectWindow(label, tc, w, d))
    return out


def schedule_duration(events, windows=()) -> float:
    """Time the stored coherence has to survive: first pulse to last observation."""
    t = [e.time for e in events]
    ends = [w.t_end if w.kind == "field" else w.t_center for w in windows]
    return max(t + ends) - min(t)


def wavevectors(schedule, k: float = 1.0):
    """Unit-magnitude wavevectors of the first three pulses for a geometry tag."""
    z = np.array([0.0, 0.0, 1.0])
    if schedule.geometry == "backward-60deg":
        c, s = math.cos(math.pi / 3), math.sin(math.pi / 3)
        k1 = z
        k2 = np.array([s, 0.0, c])
        k3 = np.array([s * c + c * s, 0.0, c * c - s * s])  # rotated another 60 deg
        return [k * k1, k * k2, k * k3]
    return [k * e.direction * z for e in schedule.events[:3]]


def echo_direction(schedule, label: str) -> int:
    """Face (+1 forward, -1 backward, 0 off-axis) an echo would leave through."""
    ks = wavevectors(schedule)
    if label == "2PE":
        kout = geometry.primary_echo_wavevector(ks[0], ks[1])
    else:
        kout = geometry.rose_echo_wavevector(*ks[:3])
    return geometry.axis_sign(kout)


def analytic_efficiency(schedule, medium) -> float | None:
    events = list(schedule.events)
    if schedule.kind != "rose" or len(events) < 3:
        return None
    t23 = events[2].time - events[1].time
    decay = 0.0 if math.isinf(medium.T2) else 4.0 * t23 / medium.T2
    if schedule.geometry == "backward-60deg":
        return efficiency_backward(medium.alphaL) * math.exp(-decay)
    return efficiency_forward(medium.alphaL, t23, medium.T2)


def population_profile(state, band_weights=None):
    """n_b per detuning averaged over shells, slices and phases."""
    return state.n_b.mean(axis=(0, 1, 3))


def _sample(times, values, t):
    return float(np.interp(min(max(t, times[0]), times[-1]), times, values))


def _nearest_gaussian(events, t):
    probes = [e for e in events if isinstance(e.params, GaussianParams)]
    if not probes:
        raise InvalidInputError("no gaussian pulse to reference the window to")
    return min(probes, key=lambda e: abs(e.time - t))


def analyze(trace, nb_line, events, windows, medium, *, snapshots=None,
            geometry=None, kind=None, shell_weights=None, detunings=None) -> RunResult:
    from types import SimpleNamespace

    events = list(events)
    sched = SimpleNamespace(events=events, times=[e.time for e in events],
                            geometry=geometry or "counterprop",
                            kind=kind or ("rose" if len(events) >= 3 else
                                          "2pe" if len(events) == 2 else "probe"))
    res = RunResult()
    res.predicted_times = dict(predict_echo_times(sched))
    res.n_b_timeline = (trace.times, nb_line)
    field_windows = [w for w in windows if w.kind == "field"]
    sig = signal_event(events)

    if sched.kind == "probe":
        # each window is referred to the probe closest to it
        for w in field_windows:
            probe = _nearest_gaussian(events, w.t_center)
            res.transmissions[w.label] = measure_efficiency(trace, probe, w, field_windows)
            res.echo_energies[w.label] = window_energy(trace, w)
        if len(res.transmissions) >= 2:
            vals = list(res.transmissions.values())
            res.gain = vals[-1] / vals[0]
            if medium.alphaL > 0:
                res.n_b_from_gain = inversion_from_gain(res.gain, medium.alphaL)
    elif field_windows:
        if sig is None:
            raise InvalidInputError("echo windows need a gaussian signal pulse")
        res.input_energy = input_energy(trace, sig)
        for w in field_windows:
            res.echo_energies[w.label] = window_energy(trace, w)
            res.efficiencies[w.label] = measure_efficiency(trace, sig, w, field_windows)
            res.echo_times[w.label] = peak_time(trace, w)
    main = _main_label(res.efficiencies)
    res.efficiency = res.efficiencies[main] if main else 0.0

    snapshots = snapshots or {}
    for w in windows:
        if w.kind == "population":
            st = snapshots.get(w.t_center)
            if st is not None:
                prof = population_profile(st)
                res.profiles[w.label] = prof
                if detunings is not None:
                    res.edge_widths[w.label] = edge_width(detunings, prof)
            res.populations[w.label] = _sample(trace.times, nb_line, w.t_center)

    reph = [e for e in events if e is not sig]
    if sig is not None and sched.kind != "probe":
        # read where the echoes form: the primary echo time after the first
        # rephasing pulse, the revival time after the second
        pred = res.predicted_times
        if len(reph) >= 1 and "2PE" in pred:
            res.n_b_after_chs1 = _sample(trace.times, nb_line, pred["2PE"])
        if len(reph) >= 2 and "ROSE" in pred:
            res.n_b_after_chs2 = _sample(trace.times, nb_line, pred["ROSE"])
    else:
        # no signal: read just after each strong pulse has passed
        after = []
        reph = [e for e in events if not isinstance(e.params, GaussianParams)]
        for i, e in enumerate(reph):
            t = e.support[1]
            if i + 1 < len(reph):
                t = min(t, reph[i + 1].support[0])
            after.append(_sample(trace.times, nb_line, t))
        if len(after) >= 1:
            res.n_b_after_chs1 = after[0]
        if len(after) >= 2:
            res.n_b_after_chs2 = after[1]
    if res.n_b_after_chs2 is not None:
        res.snr_proxy = se_snr_proxy(1.0, res.n_b_after_chs2)
    if len(events) >= 3 and sched.kind == "rose":
        res.analytic_prediction = analytic_efficiency(sched, medium)
    return res
