"""Synthesis, verification and error oracles.

Program classes expose ``synth(X, bits)`` which returns a consistent
:class:`~taudigits.core.Program`, ``None`` when no program in the class fits
the examples, or :class:`~taudigits.core.Unknown` when the backend gave up.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (DEFAULT_CONFIDENCE, ERROR_STREAM, VERIFY_STREAM, BoxProgram, ConfigError,
                   ContractError, Estimate, InputDistribution, IntervalProgram, Program, Unknown,
                   check_points, hoeffding_half_width, sample)
from .exprs import to_source
from .postcondition import Postcondition
from .sketch import Sketch, SolverConfig, solve, unroll
from .sketch.interp import SketchProgram


def _examples_to_arrays(examples, dim: int) -> tuple[np.ndarray, np.ndarray]:
    examples = list(examples)
    if not examples:
        return np.zeros((0, dim)), np.zeros(0, dtype=bool)
    X = check_points([np.asarray(x, dtype=np.float64).reshape(-1) for x, _ in examples], dim)
    bits = np.array([bool(b) for _, b in examples])
    return X, bits


def _assert_consistent(p: Program, X: np.ndarray, bits: np.ndarray) -> Program:
    if len(X) and not np.array_equal(p.predict(X).astype(bool), bits):
        raise ContractError(f"synthesized {p!r} does not reproduce its examples")
    return p


class ProgramClass:
    """A family of programs with an exact or solver-backed synthesizer."""

    name: str
    dim: int
    vc_dim: int | None = None
    exact: bool = True  # never answers Unknown

    def synth(self, X: np.ndarray, bits: np.ndarray):
        raise NotImplementedError

    def synth_examples(self, examples):
        return self.synth(*_examples_to_arrays(examples, self.dim))

    def to_dict(self) -> dict:
        return {"name": self.name}


class IntervalClass(ProgramClass):
    """Intervals ``[0, a]`` with ``a`` in [0, 1]."""

    name = "interval"
    dim = 1
    vc_dim = 1

    def synth(self, X, bits):
        x = np.asarray(X, dtype=np.float64).reshape(-1)
        bits = np.asarray(bits, dtype=bool)
        pos = x[bits]
        if pos.size and (pos.min() < 0.0 or pos.max() > 1.0):
            return None
        a = float(pos.max()) if pos.size else 0.0
        neg = x[~bits]
        if np.any((neg >= 0.0) & (neg <= a)):
            return None
        return IntervalProgram(a)

    def __repr__(self):
        return "IntervalClass()"


class BoxClass(ProgramClass):
    """Axis-aligned boxes inside ``[-1, 1]^d``."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ConfigError("box dimension must be positive")
        self.dim = int(dim)
        self.name = f"box{self.dim}"
        self.vc_dim = 2 * self.dim

    def synth(self, X, bits):
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.dim)
        bits = np.asarray(bits, dtype=bool)
        pos = X[bits]
        if not len(pos):
            return BoxProgram.empty(self.dim)
        lo, hi = pos.min(axis=0), pos.max(axis=0)
        if np.any(lo < -1.0) or np.any(hi > 1.0):
            return None
        neg = X[~bits]
        if len(neg) and np.any(np.all((neg >= lo) & (neg <= hi), axis=1)):
            return None
        return BoxProgram(lo, hi)

    def to_dict(self):
        return {"name": "box", "dim": self.dim}

    def __repr__(self):
        return f"BoxClass({self.dim})"


class SketchClass(ProgramClass):
    """Completions of a loop-free sketch, synthesized by an external SMT solver."""

    exact = False

    def __init__(self, ast: Sketch, solver: SolverConfig | None = None):
        self.ast = unroll(ast)
        self.solver = solver or SolverConfig()
        self.dim = self.ast.dim
        self.name = f"sketch:{self.ast.name}"

    def synth(self, X, bits):
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.dim)
        out = solve(self.ast, zip(X, np.asarray(bits, dtype=bool)), self.solver)
        if out is None or isinstance(out, Unknown):
            return out
        return SketchProgram(self.ast, out)

    def to_dict(self):
        return {"name": "sketch", "sketch": self.ast.name,
                "solver": self.solver.command, "solver_timeout_ms": self.solver.timeout_ms}

    def __repr__(self):
        return f"SketchClass({self.ast.name})"


def synth_box(cls: IntervalClass | BoxClass, examples):
    """Tightest program of ``cls`` consistent with ``examples`` (``[(point, bit), ...]``), or ``None``."""
    X, bits = _examples_to_arrays(examples, cls.dim)
    p = cls.synth(X, bits)
    return p if p is None else _assert_consistent(p, X, bits)


def synth_sketch(ast: Sketch, examples, cfg: SolverConfig | None = None):
    """Hole completion of ``ast`` consistent with ``examples``; ``None`` on unsat, ``Unknown`` otherwise."""
    return SketchClass(ast, cfg).synth_examples(examples)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifierConfig:
    confidence: float = DEFAULT_CONFIDENCE
    n: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.n < 1:
            raise ConfigError("the verifier needs at least one sample")


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    estimates: dict = field(default_factory=dict)  # term text -> Estimate
    degenerate: bool = False
    low_conditioning: bool = False
    missing: tuple = ()

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "estimates": {k: {"value": e.value, "ci": list(e.interval)} for k, e in self.estimates.items()},
            "degenerate": self.degenerate,
            "low_conditioning": self.low_conditioning,
            "missing": list(self.missing),
        }


def event_env(p: Program, X: np.ndarray) -> dict:
    """Names visible inside ``Pr[...]`` for program ``p`` on points ``X``."""
    env = {f"x{i + 1}": X[:, i] for i in range(X.shape[1])}
    if X.shape[1] == 1:
        env["x"] = X[:, 0]
    env.update(p.events(X))
    env["ret"] = p.predict(X).astype(bool)
    return env


class Verifier:
    """Statistical check of a postcondition on one cached sample pool.

    Every program is judged on the same ``n`` points (drawn from the verify
    stream of ``cfg.seed``); results are cached by program key.
    """

    def __init__(self, dist: InputDistribution, post: Postcondition, cfg: VerifierConfig | None = None):
        self.dist = dist
        self.post = post
        self.cfg = cfg or VerifierConfig()
        self.pool = sample(dist, self.cfg.seed, self.cfg.n, stream=VERIFY_STREAM).points
        terms = max(1, len(post.terms))
        self.half_width = hoeffding_half_width(self.cfg.n, 1.0 - (1.0 - self.cfg.confidence) / terms)
        self.calls = 0
        self._cache: dict = {}

    def __call__(self, p: Program) -> VerifyResult:
        key = p.key()
        if key not in self._cache:
            self.calls += 1
            self._cache[key] = self._verify(p)
        return self._cache[key]

    def _verify(self, p: Program) -> VerifyResult:
        env = event_env(p, self.pool)
        missing = tuple(sorted(self.post.variables() - env.keys()))
        if missing:
            return VerifyResult(False, missing=missing)
        values = self.post.term_values(env)
        ev = self.post.evaluate(values)
        estimates = {to_source(t.event): Estimate(v, self.half_width, self.cfg.n) for t, v in values.items()}
        return VerifyResult(ev.accepted, estimates, ev.degenerate, ev.low_conditioning)


def verify(p: Program, dist: InputDistribution, post: Postcondition,
           cfg: VerifierConfig | None = None) -> VerifyResult:
    return Verifier(dist, post, cfg)(p)


class ErrorOracle:
    """Disagreement with the functional specification, on a cached pool from the error stream."""

    def __init__(self, spec: Program, dist: InputDistribution, cfg: VerifierConfig | None = None):
        self.spec = spec
        self.cfg = cfg or VerifierConfig()
        self.pool = sample(dist, self.cfg.seed, self.cfg.n, stream=ERROR_STREAM).points
        self.spec_labels = spec.predict(self.pool)
        self.half_width = hoeffding_half_width(self.cfg.n, self.cfg.confidence)
        self._cache: dict = {}

    def __call__(self, p: Program) -> Estimate:
        key = p.key()
        if key not in self._cache:
            k = int(np.count_nonzero(p.predict(self.pool) != self.spec_labels))
            self._cache[key] = Estimate(k / self.cfg.n, self.half_width, self.cfg.n)
        return self._cache[key]


def error(p: Program, spec: Program, dist: InputDistribution, cfg: VerifierConfig | None = None) -> Estimate:
    return ErrorOracle(spec, dist, cfg)(p)


def make_class(name: str, dim: int = 1, sketch: Sketch | None = None,
               solver: SolverConfig | None = None) -> ProgramClass:
    if name == "interval":
        return IntervalClass()
    if name == "box":
        return BoxClass(dim)
    if name == "sketch":
        if sketch is None:
            raise ConfigError("the sketch class needs a sketch")
        return SketchClass(sketch, solver)
    raise ConfigError(f"unknown program class {name!r}")
