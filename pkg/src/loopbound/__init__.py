"""Symbolic bounds on edge visits and loop iterations of flowgraph programs."""

from .analysis import AnalysisConfig, AnalysisReport, analyze
from .ir import FlowGraph, load, lower_program, parse_flowgraph
from .oracle import Box, run_concrete, validate_bounds
from .symexpr import evaluate, render, simplify

__all__ = [
    "AnalysisConfig", "AnalysisReport", "Box", "FlowGraph", "analyze", "evaluate", "load",
    "lower_program", "parse_flowgraph", "render", "run_concrete", "simplify", "validate_bounds",
]
__version__ = "0.1.0"
