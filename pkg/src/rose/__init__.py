"""Maxwell-Bloch simulator for revival-of-silenced-echo photon-echo memories."""

from .ensemble import EnsembleGrid, EnsembleState, MediumSpec
from .errors import (ConfigurationError, InvalidGeometryError, InvalidInputError,
                     InvalidWindowError, ParseError, RoseError, SemanticError,
                     StepSizeError)
from .propagation import FieldTrace, calibrate_coupling, run_schedule
from .protocol import DetectWindow, RunResult, Schedule
from .pulses import BWD, FWD, ChsParams, GaussianParams, PulseEvent, RectParams

__version__ = "0.1.0"

__all__ = [
    "BWD", "FWD", "ChsParams", "ConfigurationError", "DetectWindow", "EnsembleGrid",
    "EnsembleState", "FieldTrace", "GaussianParams", "InvalidGeometryError",
    "InvalidInputError", "InvalidWindowError", "MediumSpec", "ParseError", "PulseEvent",
    "RectParams", "RoseError", "RunResult", "Schedule", "SemanticError", "StepSizeError",
    "calibrate_coupling", "run_schedule",
]
