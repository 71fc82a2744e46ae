"""Martingale synthesis for probabilistic loop programs.

Pipeline: parse a loop, extract its polynomial recurrences, lift a seed
expression to a martingale with Doob's decomposition, check the optional
stopping conditions, simplify the stopped fact with hints and solve it.
"""

from .analysis import Analysis, AnalysisRequest, analyze
from .doob import MartingaleForm, check_martingale, doob_decompose
from .montecarlo import SimConfig, SimReport, estimate, interpret, validate
from .ost import (Fact, OSTRefused, apply_hints, apply_ost, check_side_conditions,
                  solve_for)
from .parser import parse_program
from .recurrence import RecurrenceSystem, extract_recurrences, lift_seed, unroll

__version__ = "0.1.0"

__all__ = [
    "Analysis", "AnalysisRequest", "analyze", "MartingaleForm", "check_martingale",
    "doob_decompose", "SimConfig", "SimReport", "estimate", "interpret", "validate",
    "Fact", "OSTRefused", "apply_hints", "apply_ost", "check_side_conditions", "solve_for",
    "parse_program", "RecurrenceSystem", "extract_recurrences", "lift_seed", "unroll",
]
