"""Line-oriented pulse-sequence files.

One declaration per line, ``#`` starts a comment::

    medium alphaL=0.71 L=7.5mm T2=230us T1=10ms lambda=1536nm halfwidth=2.5Mrad
    grid nz=64 ndet=801 nphi=8 dt=10ns
    schedule kind=rose geometry=counterprop
    pulse t=0 shape=gaussian fwhm=3us area=0.05pi dir=+z
    pulse t=20.5us shape=chs beta=125krad mu=10 rabi=0.8Mrad dir=-z
    pulse t=61.5us shape=chs beta=125krad mu=10 rabi=0.8Mrad dir=-z
    detect auto
    expect key=efficiency value=0.122 rtol=0.15

Units: ns/us/ms/s, mm/um/nm/m, ``pi`` for areas, krad/Mrad for angular
rates (rad/s).  Hz, kHz and MHz are ordinary frequencies and are
MULTIPLIED BY 2 pi on reading, so ``beta=120kHz`` means 7.54e5 rad/s.
Bare numbers are SI (rad/s for rates, radians for areas).
"""

from __future__ import annotations

import math
import re
from decimal import Decimal
from dataclasses import dataclass, field

from ..ensemble import EnsembleGrid, MediumSpec
from ..errors import ConfigurationError, InvalidInputError, ParseError, SemanticError
from ..propagation import max_chirp_halfspan
from ..protocol import DetectWindow, Schedule, default_windows, schedule_duration
from ..pulses import BWD, FWD, ChsParams, GaussianParams, PulseEvent, RectParams

TWO_PI = 2.0 * math.pi

# unit -> (power of ten, extra factor); the power of ten is applied in
# decimal so that "5us" reads as exactly 5e-06
UNITS = {
    "time": {"": (0, 1.0), "s": (0, 1.0), "ms": (-3, 1.0), "us": (-6, 1.0), "ns": (-9, 1.0)},
    "rate": {"": (0, 1.0), "rad": (0, 1.0), "krad": (3, 1.0), "Mrad": (6, 1.0),
             "Hz": (0, TWO_PI), "kHz": (3, TWO_PI), "MHz": (6, TWO_PI)},
    "length": {"": (0, 1.0), "m": (0, 1.0), "mm": (-3, 1.0), "um": (-6, 1.0), "nm": (-9, 1.0)},
    "angle": {"": (0, 1.0), "rad": (0, 1.0), "pi": (0, math.pi)},
    "number": {"": (0, 1.0)},
}
ANY_UNIT = {u: f for table in UNITS.values() for u, f in table.items()}

_NUMBER = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf)?([A-Za-z]*)$")

# key -> (dimension, attribute); "int" and "word" values are not numbers
MEDIUM_KEYS = {"alphaL": "number", "L": "length", "T1": "time", "T2": "time",
               "lambda": "length", "halfwidth": "rate"}
GRID_KEYS = {"nz": "int", "ndet": "int", "nphi": "int", "nr": "int", "dt": "time"}
SCHEDULE_KEYS = {"kind": "word", "geometry": "word", "rho": "number"}
PULSE_KEYS = {
    "gaussian": {"t": "time", "fwhm": "time", "area": "angle", "offset": "rate"},
    "rect": {"t": "time", "dur": "time", "area": "angle"},
    "chs": {"t": "time", "beta": "rate", "mu": "number", "rabi": "rate",
            "offset": "rate", "trunc": "number"},
}
DETECT_KEYS = {"label": "word", "t": "time", "width": "time", "dir": "word", "kind": "word"}
EXPECT_KEYS = {"key": "word", "value": "any", "rtol": "number", "atol": "any",
               "max": "any", "min": "any"}
DIRS = {"+z": FWD, "-z": BWD}


@dataclass(frozen=True)
class Expectation:
    """Regression target for one summary key."""

    key: str
    value: float | None = None
    rtol: float | None = None
    atol: float | None = None
    max: float | None = None
    min: float | None = None

    def check(self, measured) -> bool:
        if measured is None or (isinstance(measured, float) and math.isnan(measured)):
            return False
        ok = True
        if self.value is not None:
            tol = 0.0
            if self.rtol is not None:
                tol = max(tol, self.rtol * abs(self.value))
            if self.atol is not None:
                tol = max(tol, self.atol)
            ok &= abs(measured - self.value) <= tol
        if self.max is not None:
            ok &= measured <= self.max
        if self.min is not None:
            ok &= measured >= self.min
        return bool(ok)

    def describe(self) -> str:
        parts = []
        if self.value is not None:
            parts.append(f"{self.value:.6g}")
            if self.rtol is not None:
                parts.append(f"rtol {self.rtol:g}")
            if self.atol is not None:
                parts.append(f"atol {self.atol:g}")
        if self.min is not None:
            parts.append(f">= {self.min:g}")
        if self.max is not None:
            parts.append(f"<= {self.max:g}")
        return ", ".join(parts)


@dataclass
class SequenceDoc:
    medium: MediumSpec
    grid: EnsembleGrid
    schedule: Schedule
    windows: list = field(default_factory=list)   # explicit detect lines
    auto_windows: bool = False
    expects: list = field(default_factory=list)
    rho: float = math.inf

    def all_windows(self) -> list:
        auto = default_windows(self.schedule) if self.auto_windows else []
        return auto + list(self.windows)


def parse_value(text: str, dim: str, line: int, col: int) -> float:
    m = _NUMBER.match(text)
    if not m or (m.group(1) is None and m.group(2) != "pi"):
        raise ParseError(f"cannot read a number from {text!r}", line, col)
    unit = m.group(2)
    table = ANY_UNIT if dim == "any" else UNITS[dim]
    if unit not in table:
        raise ParseError(f"unit {unit!r} does not fit a {dim} value", line, col)
    exp, factor = table[unit]
    if m.group(1) is None:
        return factor
    if "inf" in m.group(1):
        return float(m.group(1))
    scaled = float(Decimal(m.group(1)).scaleb(exp))
    return scaled if factor == 1.0 else scaled * factor


def _parse_int(text, line, col):
    if not re.fullmatch(r"\d+", text):
        raise ParseError(f"expected a whole number, got {text!r}", line, col)
    return int(text)


def _fields(tokens, keys, line, decl):
    """Turn ``k=v`` tokens into a dict of converted values."""
    out = {}
    for col, tok in tokens:
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", line, col)
        k, v = tok.split("=", 1)
        if k not in keys:
            raise ParseError(f"unknown key {k!r} for {decl}", line, col)
        if k in out:
            raise ParseError(f"duplicate key {k!r}", line, col)
        if not v:
            raise ParseError(f"missing value for {k!r}", line, col + len(k) + 1)
        vcol = col + len(k) + 1
        dim = keys[k]
        if dim == "int":
            out[k] = _parse_int(v, line, vcol)
        elif dim == "word":
            out[k] = v
        else:
            out[k] = parse_value(v, dim, line, vcol)
    return out


def _require(d, names, decl, line):
    for n in names:
        if n not in d:
            raise SemanticError("required", f"{decl} needs {n}=", line)


def _pulse(tokens, line):
    shape_tok = [(c, t) for c, t in tokens if t.startswith("shape=")]
    if not shape_tok:
        raise SemanticError("required", "pulse needs shape=", line)
    col, tok = shape_tok[0]
    shape = tok.split("=", 1)[1]
    if shape not in PULSE_KEYS:
        raise ParseError(f"unknown pulse shape {shape!r}", line, col + 6)
    keys = dict(PULSE_KEYS[shape], shape="word", dir="word")
    d = _fields(tokens, keys, line, f"{shape} pulse")
    dcol = next((c for c, t in tokens if t.startswith("dir=")), col)
    direction = DIRS.get(d.get("dir", "+z"))
    if direction is None:
        raise ParseError(f"dir must be +z or -z, got {d['dir']!r}", line, dcol + 4)
    try:
        if shape == "gaussian":
            _require(d, ("t", "fwhm", "area"), "gaussian pulse", line)
            p = GaussianParams(d["fwhm"], d["area"], d["t"], d.get("offset", 0.0))
        elif shape == "rect":
            _require(d, ("t", "dur", "area"), "rect pulse", line)
            p = RectParams(d["dur"], d["area"], d["t"])
        else:
            _require(d, ("t", "beta", "mu", "rabi"), "chs pulse", line)
            p = ChsParams(d["rabi"], d["beta"], d["mu"], d["t"], d.get("offset", 0.0),
                          d.get("trunc", 6.0))
    except InvalidInputError as exc:
        raise SemanticError("pulse-params", str(exc), line) from exc
    return PulseEvent(shape, p, direction)


def _detect(tokens, line):
    if len(tokens) == 1 and tokens[0][1] == "auto":
        return "auto"
    d = _fields(tokens, DETECT_KEYS, line, "detect")
    _require(d, ("label", "t"), "detect", line)
    kind = d.get("kind", "field")
    direction = DIRS.get(d.get("dir", "+z"))
    if direction is None:
        raise SemanticError("detect", f"dir must be +z or -z, got {d['dir']!r}", line)
    if kind == "field":
        _require(d, ("width",), "field detect", line)
    try:
        return DetectWindow(d["label"], d["t"], d.get("width", 0.0), direction, kind)
    except Exception as exc:
        raise SemanticError("detect", str(exc), line) from exc


def _split(raw):
    text = raw.split("#", 1)[0]
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", text)]


def parse_document(text: str, check_grid: bool = True) -> SequenceDoc:
    medium = grid = sched_opts = None
    lines = {}
    pulses, windows, expects = [], [], []
    auto = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _split(raw)
        if not toks:
            continue
        col, decl = toks[0]
        rest = toks[1:]
        if decl in ("medium", "grid", "schedule") and decl in lines:
            raise ParseError(f"second {decl} declaration (first on line {lines[decl]})",
                             lineno, col)
        if decl == "medium":
            lines[decl] = lineno
            medium = (_fields(rest, MEDIUM_KEYS, lineno, "medium"), lineno)
        elif decl == "grid":
            lines[decl] = lineno
            grid = (_fields(rest, GRID_KEYS, lineno, "grid"), lineno)
        elif decl == "schedule":
            lines[decl] = lineno
            sched_opts = (_fields(rest, SCHEDULE_KEYS, lineno, "schedule"), lineno)
        elif decl == "pulse":
            pulses.append((_pulse(rest, lineno), lineno))
        elif decl == "detect":
            w = _detect(rest, lineno)
            if w == "auto":
                auto = True
            else:
                windows.append(w)
        elif decl == "expect":
            d = _fields(rest, EXPECT_KEYS, lineno, "expect")
            _require(d, ("key",), "expect", lineno)
            if not any(k in d for k in ("value", "max", "min")):
                raise SemanticError("required", "expect needs value=, max= or min=", lineno)
            expects.append(Expectation(d["key"], d.get("value"), d.get("rtol"),
                                       d.get("atol"), d.get("max"), d.get("min")))
        else:
            raise ParseError(f"unknown declaration {decl!r}", lineno, col)

    if medium is None:
        raise SemanticError("required", "no medium declaration")
    if not pulses:
        raise SemanticError("required", "no pulse declaration")
    md, mline = medium
    _require(md, ("alphaL", "L"), "medium", mline)
    try:
        med = MediumSpec(md["alphaL"], md["L"], md.get("T1", math.inf), md.get("T2", math.inf),
                         md.get("lambda", 1.536e-6), md.get("halfwidth", 2e6))
    except InvalidInputError as exc:
        raise SemanticError("medium", str(exc), mline) from exc
    gd, gline = grid if grid else ({}, None)
    try:
        grd = EnsembleGrid(n_z=gd.get("nz", 64), n_det=gd.get("ndet", 801),
                           n_phi=gd.get("nphi", 8), n_r=gd.get("nr", 1), dt=gd.get("dt", 1e-8))
    except ConfigurationError as exc:
        raise SemanticError("grid-bounds", str(exc), gline) from exc

    events = [p for p, _ in pulses]
    for (a, la), (b, lb) in zip(pulses, pulses[1:]):
        if not a.time < b.time:
            raise SemanticError("pulse-order",
                                f"pulse at {b.time:g} s does not follow the one on line {la}", lb)
    sd, sline = sched_opts if sched_opts else ({}, None)
    kind = sd.get("kind") or {1: "probe", 2: "2pe"}.get(len(events), "rose")
    geo = sd.get("geometry")
    if geo is None:
        geo = "coprop" if len({e.direction for e in events}) == 1 else "counterprop"
    try:
        sched = Schedule(tuple(events), geo, kind)
        sched.validate()
    except SemanticError as exc:
        raise SemanticError(exc.rule, str(exc).split("] ", 1)[-1],
                            pulses[-1][1] if exc.rule != "t3>te" else pulses[2][1]) from exc
    except InvalidInputError as exc:
        raise SemanticError("schedule", str(exc), sline) from exc
    doc = SequenceDoc(med, grd, sched, windows, auto, expects, sd.get("rho", math.inf))
    if check_grid:
        try:
            grd.check(med, schedule_duration(events, doc.all_windows()),
                      max_chirp_halfspan(events))
        except ConfigurationError as exc:
            raise SemanticError("grid-bounds", str(exc), gline) from exc
    return doc


def parse_sequence(text: str, check_grid: bool = True):
    """Parse a sequence file into ``(medium, grid, schedule, windows)``."""
    doc = parse_document(text, check_grid)
    return doc.medium, doc.grid, doc.schedule, doc.all_windows()


def _num(x: float) -> str:
    return repr(float(x))


def _dir(d: int) -> str:
    return "+z" if d == FWD else "-z"


def serialize(doc: SequenceDoc) -> str:
    """Write a document back out with SI values (exact round trip)."""
    m, g, s = doc.medium, doc.grid, doc.schedule
    out = [
        f"medium alphaL={_num(m.alphaL)} L={_num(m.L)} T1={_num(m.T1)} T2={_num(m.T2)} "
        f"lambda={_num(m.wavelength)} halfwidth={_num(m.inhom_halfwidth)}",
        f"grid nz={g.n_z} ndet={g.n_det} nphi={g.n_phi} nr={g.n_r} dt={_num(g.dt)}",
        f"schedule kind={s.kind} geometry={s.geometry} rho={_num(doc.rho)}",
    ]
    for e in s.events:
        p = e.params
        if isinstance(p, GaussianParams):
            body = (f"t={_num(p.t_center)} shape=gaussian fwhm={_num(p.fwhm)} "
                    f"area={_num(p.area)} offset={_num(p.carrier_offset)}")
        elif isinstance(p, RectParams):
            body = f"t={_num(p.t_start)} shape=rect dur={_num(p.duration)} area={_num(p.area)}"
        else:
            body = (f"t={_num(p.t0)} shape=chs beta={_num(p.beta)} mu={_num(p.mu)} "
                    f"rabi={_num(p.Omega0)} offset={_num(p.carrier_offset)} "
                    f"trunc={_num(p.truncation)}")
        out.append(f"pulse {body} dir={_dir(e.direction)}")
    if doc.auto_windows:
        out.append("detect auto")
    for w in doc.windows:
        line = f"detect label={w.label} t={_num(w.t_center)} dir={_dir(w.direction)} kind={w.kind}"
        if w.kind == "field":
            line += f" width={_num(w.width)}"
        out.append(line)
    for x in doc.expects:
        line = f"expect key={x.key}"
        for k in ("value", "rtol", "atol", "max", "min"):
            v = getattr(x, k)
            if v is not None:
                line += f" {k}={_num(v)}"
        out.append(line)
    return "\n".join(out) + "\n"
