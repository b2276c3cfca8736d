"""One-parameter sweeps over a base scenario.

Sweep files use the sequence-file conventions::

    # efficiency against opacity without dephasing
    base scenario=tm_yag_rose
    set medium.T2=inf
    sweep param=medium.alphaL lo=0.25 hi=1.5 steps=6

``base`` may name a packaged scenario or a ``file=`` path relative to the
sweep file.  Settable paths: ``medium.<field>``, ``grid.<field>``,
``schedule.t12`` (shifts every later pulse) and ``schedule.t23`` (shifts
the third pulse onward).
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError, ParseError, SemanticError
from ..protocol import Schedule
from ..pulses import ChsParams, GaussianParams, PulseEvent, RectParams
from .runner import ScenarioSpec, load_file, load_scenario, simulate_spec
from .sequence import parse_value

MEDIUM_PATHS = {"alphaL": ("alphaL", "number"), "L": ("L", "length"), "T1": ("T1", "time"),
                "T2": ("T2", "time"), "lambda": ("wavelength", "length"),
                "halfwidth": ("inhom_halfwidth", "rate")}
GRID_PATHS = {"nz": ("n_z", "int"), "ndet": ("n_det", "int"), "nphi": ("n_phi", "int"),
              "dt": ("dt", "time")}
SCHEDULE_PATHS = {"t12": "time", "t23": "time"}

DEFAULT_OUTPUTS = ("efficiency", "echo_time_s", "n_b_after_chs2")


@dataclass
class SweepSpec:
    param: str
    lo: float
    hi: float
    steps: int
    scenario: str
    outputs: tuple = DEFAULT_OUTPUTS
    settings: dict = field(default_factory=dict)
    base_file: str | None = None

    def __post_init__(self):
        dimension(self.param)
        if not self.steps >= 2:
            raise InvalidInputError("a sweep needs at least 2 steps")
        if not self.lo <= self.hi:
            raise InvalidInputError("sweep range needs lo <= hi")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


def dimension(path: str) -> str:
    head, _, tail = path.partition(".")
    table = {"medium": {k: v[1] for k, v in MEDIUM_PATHS.items()},
             "grid": {k: v[1] for k, v in GRID_PATHS.items()},
             "schedule": SCHEDULE_PATHS}.get(head)
    if table is None or tail not in table:
        raise InvalidInputError(f"unknown parameter path {path!r}")
    return table[tail]


def _shift(e: PulseEvent, dt: float) -> PulseEvent:
    p = e.params
    if isinstance(p, GaussianParams):
        p = replace(p, t_center=p.t_center + dt)
    elif isinstance(p, ChsParams):
        p = replace(p, t0=p.t0 + dt)
    elif isinstance(p, RectParams):
        p = replace(p, t_start=p.t_start + dt)
    return PulseEvent(e.shape, p, e.direction)


def apply(spec: ScenarioSpec, path: str, value: float) -> ScenarioSpec:
    """Copy of ``spec`` with one parameter replaced."""
    dimension(path)
    head, _, tail = path.partition(".")
    doc = spec.doc
    if head == "medium":
        doc = replace(doc, medium=replace(doc.medium, **{MEDIUM_PATHS[tail][0]: value}))
    elif head == "grid":
        attr, kind = GRID_PATHS[tail]
        doc = replace(doc, grid=replace(doc.grid, **{attr: int(round(value)) if kind == "int" else value}))
    else:
        ev = list(doc.schedule.events)
        i = 1 if tail == "t12" else 2
        if len(ev) <= i:
            raise InvalidInputError(f"{path} needs at least {i + 1} pulses")
        delta = value - (ev[i].center - ev[i - 1].center)
        ev = ev[:i] + [_shift(e, delta) for e in ev[i:]]
        sched = Schedule(tuple(ev), doc.schedule.geometry, doc.schedule.kind)
        try:
            sched.validate()
        except SemanticError as exc:
            raise InvalidInputError(str(exc)) from exc
        doc = replace(doc, schedule=sched)
    return replace(spec, doc=doc)


def _value(path, text, line, col):
    dim = dimension(path)
    if dim == "int":
        dim = "number"
    return parse_value(text, dim, line, col)


def parse_sweep(text: str) -> SweepSpec:
    base = base_file = None
    settings = {}
    sweep = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", raw.split("#", 1)[0])]
        if not toks:
            continue
        col, decl = toks[0]
        kv = {}
        for c, t in toks[1:]:
            if "=" not in t:
                raise ParseError(f"expected key=value, got {t!r}", lineno, c)
            k, v = t.split("=", 1)
            kv[k] = (v, c + len(k) + 1)
        if decl == "base":
            if "scenario" in kv:
                base = kv["scenario"][0]
            elif "file" in kv:
                base_file = kv["file"][0]
            else:
                raise SemanticError("required", "base needs scenario= or file=", lineno)
        elif decl == "set":
            for k, (v, c) in kv.items():
                try:
                    settings[k] = _value(k, v, lineno, c)
                except InvalidInputError as exc:
                    raise ParseError(str(exc), lineno, c - len(k) - 1) from exc
        elif decl == "sweep":
            unknown = set(kv) - {"param", "lo", "hi", "steps", "outputs"}
            if unknown:
                k = sorted(unknown)[0]
                raise ParseError(f"unknown key {k!r} for sweep", lineno, kv[k][1] - len(k) - 1)
            for k in ("param", "lo", "hi", "steps"):
                if k not in kv:
                    raise SemanticError("required", f"sweep needs {k}=", lineno)
            param = kv["param"][0]
            try:
                lo = _value(param, kv["lo"][0], lineno, kv["lo"][1])
                hi = _value(param, kv["hi"][0], lineno, kv["hi"][1])
            except InvalidInputError as exc:
                raise ParseError(str(exc), lineno, kv["param"][1]) from exc
            if not kv["steps"][0].isdigit():
                raise ParseError("steps must be a whole number", lineno, kv["steps"][1])
            outs = tuple(kv["outputs"][0].split(",")) if "outputs" in kv else DEFAULT_OUTPUTS
            sweep = (param, lo, hi, int(kv["steps"][0]), outs)
        else:
            raise ParseError(f"unknown declaration {decl!r}", lineno, col)
    if sweep is None:
        raise SemanticError("required", "no sweep declaration")
    if base is None and base_file is None:
        raise SemanticError("required", "no base declaration")
    param, lo, hi, steps, outs = sweep
    return SweepSpec(param, lo, hi, steps, base or "", outs, settings, base_file)


def load_sweep(path) -> SweepSpec:
    path = Path(path)
    spec = parse_sweep(path.read_text())
    if spec.base_file is not None:
        spec.base_file = str((path.parent / spec.base_file).resolve())
    return spec


def base_spec(spec: SweepSpec) -> ScenarioSpec:
    if spec.base_file:
        base = load_file(spec.base_file, check_grid=False)
    else:
        base = load_scenario(spec.scenario, check_grid=False)
    for k, v in spec.settings.items():
        base = apply(base, k, v)
    return base


def run_sweep(spec: SweepSpec, out_path=None, *, grid_overrides=None, workers=None) -> list[dict]:
    """Run every sweep point; returns rows and optionally writes them as CSV."""
    from .runner import with_grid

    base = base_spec(spec)
    if grid_overrides:
        base = with_grid(base, **grid_overrides)
    rows = []
    for v in spec.values():
        point = apply(base, spec.param, float(v))
        _, _, result = simulate_spec(point, workers)
        summ = result.summary()
        row = {"parameter": float(v), "measured": result.efficiency,
               "analytic": result.analytic_prediction}
        for k in spec.outputs:
            row[k] = summ.get(k)
        rows.append(row)
    if out_path is not None:
        write_rows(out_path, rows)
    return rows


def write_rows(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})


def best_point(rows, key: str = "measured"):
    vals = [r[key] for r in rows]
    i = int(np.nanargmax(vals))
    return rows[i]["parameter"], vals[i]


def ratio_spread(rows) -> float:
    """Relative spread of measured/analytic across the sweep."""
    r = np.array([row["measured"] / row["analytic"] for row in rows if row["analytic"]])
    if r.size == 0:
        return math.nan
    return float((r.max() - r.min()) / r.mean())
