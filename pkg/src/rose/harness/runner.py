"""Scenario registry and run orchestration with CSV/summary output."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import InvalidInputError
from ..propagation import run_schedule
from .sequence import SequenceDoc, parse_document

log = logging.getLogger(__name__)

TRACE_HEADER = "time_s,re_fwd,im_fwd,re_bwd,im_bwd"


@dataclass
class ScenarioSpec:
    name: str
    doc: SequenceDoc
    description: str = ""

    @property
    def medium(self):
        return self.doc.medium

    @property
    def grid(self):
        return self.doc.grid

    @property
    def schedule(self):
        return self.doc.schedule

    @property
    def windows(self):
        return self.doc.all_windows()

    @property
    def expects(self):
        return self.doc.expects


@dataclass
class Outcome:
    name: str
    result: object
    checks: list = field(default_factory=list)   # (key, measured, passed, expected)
    files: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c[2] for c in self.checks)


def _scenario_dir():
    return resources.files("rose").joinpath("scenarios")


def list_scenarios() -> list[str]:
    return sorted(p.name[:-4] for p in _scenario_dir().iterdir() if p.name.endswith(".seq"))


def _description(text: str) -> str:
    lines = []
    for raw in text.splitlines():
        if not raw.startswith("#"):
            break
        lines.append(raw.lstrip("# ").rstrip())
    return " ".join(lines)


def load_scenario(name: str, check_grid: bool = True) -> ScenarioSpec:
    path = _scenario_dir().joinpath(f"{name}.seq")
    if not path.is_file():
        raise InvalidInputError(f"unknown scenario {name!r}; known: {', '.join(list_scenarios())}")
    text = path.read_text()
    return ScenarioSpec(name, parse_document(text, check_grid), _description(text))


def load_file(path, check_grid: bool = True) -> ScenarioSpec:
    path = Path(path)
    text = path.read_text()
    return ScenarioSpec(path.stem, parse_document(text, check_grid), _description(text))


def with_grid(spec: ScenarioSpec, dt=None, ndet=None, nz=None) -> ScenarioSpec:
    """Copy of ``spec`` with command-line grid overrides applied."""
    grid = spec.doc.grid.with_overrides(dt=dt, n_det=ndet, n_z=nz)
    return replace(spec, doc=replace(spec.doc, grid=grid))


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def simulate_spec(spec: ScenarioSpec, workers: int | None = None):
    doc = spec.doc
    windows = doc.all_windows()
    snaps = [w.t_center for w in windows if w.kind == "population"]
    return run_schedule(doc.medium, doc.grid, doc.schedule, windows, snaps,
                        workers=workers or default_workers(), rho=doc.rho)


def evaluate(spec: ScenarioSpec, result) -> list:
    summary = result.summary()
    checks = []
    for x in spec.expects:
        measured = summary.get(x.key)
        checks.append((x.key, measured, x.check(measured), x.describe()))
    return checks


def write_trace(path, trace) -> None:
    data = np.column_stack([trace.times, trace.fwd_out.real, trace.fwd_out.imag,
                            trace.bwd_out.real, trace.bwd_out.imag])
    np.savetxt(path, data, delimiter=",", header=TRACE_HEADER, comments="", fmt="%.12e")


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_summary(path, name, result, checks) -> None:
    lines = [f"scenario={name}"]
    for k, v in result.summary().items():
        lines.append(f"{k}={_fmt(v)}")
    for key, measured, ok, expected in checks:
        lines.append(f"check.{key}={'PASS' if ok else 'FAIL'} ({expected})")
    lines.append(f"regression={'PASS' if all(c[2] for c in checks) else 'FAIL'}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_profiles(path, detunings, profiles: dict) -> None:
    labels = list(profiles)
    data = np.column_stack([detunings / (2 * math.pi)] + [profiles[k] for k in labels])
    header = ",".join(["detuning_hz"] + [f"n_b_{k}" for k in labels])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.10e")


def run_spec(spec: ScenarioSpec, out_dir=None, workers: int | None = None) -> Outcome:
    """Run one parsed scenario and optionally write its artifacts."""
    trace, _, result = simulate_spec(spec, workers)
    outcome = Outcome(spec.name, result, evaluate(spec, result))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        files = {"trace": out / f"{spec.name}_trace.csv",
                 "summary": out / f"{spec.name}_summary.txt"}
        write_trace(files["trace"], trace)
        write_summary(files["summary"], spec.name, result, outcome.checks)
        if result.profiles:
            files["profiles"] = out / f"{spec.name}_profiles.csv"
            write_profiles(files["profiles"], spec.grid.detunings(spec.medium), result.profiles)
        outcome.files = files
    for key, measured, ok, expected in outcome.checks:
        log.info("%s %s: %s (expected %s)", spec.name, key, "ok" if ok else "FAILED", expected)
    return outcome


def run_scenario(name: str, out_dir=None, *, dt=None, ndet=None, nz=None,
                 workers: int | None = None) -> Outcome:
    spec = load_scenario(name, check_grid=False)
    spec = with_grid(spec, dt, ndet, nz)
    return run_spec(spec, out_dir, workers)
