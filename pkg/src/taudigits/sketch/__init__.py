"""Sketch language: parsing, unrolling, evaluation and SMT-LIB2 encoding."""

from importlib import resources

from .ast import Assert, Assign, Declare, For, If, Return, Sketch, to_text, unroll
from .interp import evaluate_sketch, run_batch
from .parser import SketchError, parse, parse_file
from .reference import interpret
from .smt import SolverConfig, SolverError, emit_constraints, encode, solve


def builtin_source(name: str) -> str:
    """Text of a sketch shipped with the package (``interval`` or ``thermostat``)."""
    return resources.files(__package__).joinpath("data", f"{name}.skh").read_text(encoding="utf-8")


def thermostat(unrollings: int, n_threshold: float, unrolled: bool = True) -> Sketch:
    ast = parse(builtin_source("thermostat"), {"Unrollings": unrollings, "N": n_threshold})
    return unroll(ast) if unrolled else ast


def interval_sketch() -> Sketch:
    return parse(builtin_source("interval"))


__all__ = [
    "Assert", "Assign", "Declare", "For", "If", "Return", "Sketch", "SketchError", "SolverConfig",
    "SolverError", "builtin_source", "emit_constraints", "encode", "evaluate_sketch", "interpret",
    "interval_sketch", "parse", "parse_file", "run_batch", "solve", "thermostat", "to_text", "unroll",
]
