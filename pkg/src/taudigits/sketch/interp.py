"""Execution of loop-free sketches.

:func:`execute` runs a loop-free body once for a whole batch of inputs: both
arms of a conditional are executed and merged with ``ite``.  Early returns are
tracked with a ``done`` flag.  The same driver serves the numpy evaluator and
the SMT encoder, which differ only in their :class:`Ops`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import ContractError, Program, check_points
from ..exprs import eval_np
from .ast import Assert, Assign, Declare, For, If, Return, Sketch


class Ops:
    """Value domain used by :func:`execute`."""

    def eval(self, expr, env: dict):
        raise NotImplementedError

    def ite(self, cond, a, b):
        raise NotImplementedError

    def bind(self, name: str, value):
        return value


@dataclass
class State:
    env: dict
    ret: object = False
    done: object = False
    events: list = field(default_factory=list)

    def fork(self) -> "State":
        return State(dict(self.env), self.ret, self.done, self.events)


def execute(body, state: State, ops: Ops) -> State:
    for s in body:
        if isinstance(s, Assign):
            state.env[s.target] = ops.bind(s.target, ops.eval(s.expr, state.env))
        elif isinstance(s, Declare):
            continue
        elif isinstance(s, If):
            c = ops.eval(s.cond, state.env)
            if c is True or c is False:
                execute(s.then if c else s.orelse, state, ops)
                continue
            t = execute(s.then, state.fork(), ops)
            e = execute(s.orelse, state.fork(), ops)
            for name in t.env.keys() | e.env.keys():
                if name not in t.env or name not in e.env:
                    state.env[name] = t.env.get(name, e.env.get(name))
                elif t.env[name] is e.env[name]:
                    state.env[name] = t.env[name]
                else:
                    state.env[name] = ops.bind(name, ops.ite(c, t.env[name], e.env[name]))
            state.ret = ops.bind("ret", ops.ite(c, t.ret, e.ret))
            state.done = ops.bind("done", ops.ite(c, t.done, e.done))
        elif isinstance(s, Return):
            value = ops.eval(s.expr, state.env)
            state.ret = ops.bind("ret", ops.ite(state.done, state.ret, value))
            state.done = True
        elif isinstance(s, Assert):
            state.events = state.events + [ops.eval(s.event, state.env)]
        elif isinstance(s, For):
            raise ContractError("sketch must be unrolled before execution")
        else:
            raise TypeError(s)
    return state


class NumpyOps(Ops):
    def __init__(self, holes: dict):
        self.holes = holes

    def eval(self, expr, env):
        v = eval_np(expr, env, self.holes)
        if isinstance(v, np.bool_):
            return bool(v)
        if isinstance(v, np.ndarray) and v.dtype == bool and v.size:
            if v.all():
                return True
            if not v.any():
                return False
        return v

    def ite(self, cond, a, b):
        if cond is True or cond is False:
            return a if cond else b
        return np.where(cond, a, b)


def check_holes(ast: Sketch, holes: dict) -> dict:
    out = {}
    for h in ast.holes:
        if h.id not in holes:
            raise ContractError(f"hole {h.id!r} has no value")
        v = float(holes[h.id])
        if not h.lo <= v <= h.hi:
            raise ContractError(f"hole {h.id!r} = {v} outside [{h.lo}, {h.hi}]")
        out[h.id] = v
    return out


def run_batch(ast: Sketch, holes: dict, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Output bits and per-assert event truth values for every row of ``X``."""
    if not ast.is_loop_free:
        raise ContractError("sketch must be unrolled before evaluation")
    X = check_points(X, ast.dim)
    n = len(X)
    env = {name: X[:, i] for i, name in enumerate(ast.input_names)}
    state = execute(ast.body, State(env), NumpyOps(holes))
    ret = np.broadcast_to(np.asarray(state.ret, dtype=bool), (n,))
    events = [np.broadcast_to(np.asarray(e, dtype=bool), (n,)) for e in state.events]
    return ret, events


def evaluate_sketch(ast: Sketch, holes: dict, x) -> tuple[int, tuple[bool, ...]]:
    """Output bit and assert-event truth values for a single input vector."""
    holes = check_holes(ast, holes)
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != ast.dim:
        raise ContractError(f"input dimension {x.shape[1]} does not match sketch dimension {ast.dim}")
    ret, events = run_batch(ast, holes, x)
    return int(ret[0]), tuple(bool(e[0]) for e in events)


class SketchProgram(Program):
    """A sketch completed with a hole assignment."""

    def __init__(self, ast: Sketch, holes: dict):
        if not ast.is_loop_free:
            raise ContractError("sketch must be unrolled before use as a program")
        self.ast = ast
        self.holes = check_holes(ast, holes)
        self.class_id = f"sketch:{ast.name}"
        self.dim = ast.dim

    @property
    def params(self) -> tuple:
        return tuple(self.holes[h.id] for h in self.ast.holes)

    def _predict(self, X):
        return run_batch(self.ast, self.holes, X)[0]

    def events(self, X):
        X = check_points(X, self.dim)
        _, events = run_batch(self.ast, self.holes, X)
        out = {name: X[:, i] for i, name in enumerate(self.ast.input_names)}
        out.update(zip(self.ast.event_names(), events))
        return out

    def to_dict(self) -> dict:
        return {"class": self.class_id, "params": list(self.params), "holes": dict(self.holes)}

    def __repr__(self):
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.holes.items())
        return f"SketchProgram({self.ast.name}: {inner})"
