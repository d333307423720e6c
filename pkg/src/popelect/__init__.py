"""Simulator and experiment harness for fast leader election in population protocols."""

from .params import ProtocolParams
from .engine import SimState, Stop, StopCondition, TrialRecord, new_population, run_trial, run_until, step

__version__ = "0.1.0"

__all__ = [
    "ProtocolParams",
    "SimState",
    "Stop",
    "StopCondition",
    "TrialRecord",
    "new_population",
    "run_trial",
    "run_until",
    "step",
]
