"""Sequence files, named scenarios, sweeps and the command line."""

from .runner import (Outcome, ScenarioSpec, list_scenarios, load_file, load_scenario,
                     run_scenario, run_spec)
from .sequence import Expectation, SequenceDoc, parse_document, parse_sequence, serialize
from .sweep import SweepSpec, load_sweep, parse_sweep, run_sweep

__all__ = [
    "Expectation", "Outcome", "ScenarioSpec", "SequenceDoc", "SweepSpec", "list_scenarios",
    "load_file", "load_scenario", "load_sweep", "parse_document", "parse_sequence",
    "parse_sweep", "run_scenario", "run_spec", "run_sweep", "serialize",
]
