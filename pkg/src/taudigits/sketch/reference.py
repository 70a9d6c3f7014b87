"""Direct scalar interpreter that executes loops natively.

Kept deliberately separate from the batch evaluator: it walks statements one
input at a time, uses Python floats, stops at the first ``return`` and never
unrolls anything.  Tests compare the two.
"""

from __future__ import annotations

import operator

from ..core import ContractError
from ..exprs import Binary, BoolLit, Call, Hole, Num, Unary, Var
from .ast import Assert, Assign, Declare, For, If, Return, Sketch

_BINARY = {
    "+": operator.add, "-": operator.sub, "*": operator.mul,
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "==": operator.eq, "!=": operator.ne,
}


def _div(a, b):
    if b == 0:
        if a == 0:
            return float("nan")
        return float("inf") if a > 0 else float("-inf")
    return a / b


def _eval(e, env, holes):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Hole):
        return holes[e.id]
    if isinstance(e, Unary):
        v = _eval(e.operand, env, holes)
        return -v if e.op == "-" else not v
    if isinstance(e, Binary):
        if e.op == "&&":
            return bool(_eval(e.left, env, holes)) and bool(_eval(e.right, env, holes))
        if e.op == "||":
            return bool(_eval(e.left, env, holes)) or bool(_eval(e.right, env, holes))
        a, b = _eval(e.left, env, holes), _eval(e.right, env, holes)
        if e.op == "/":
            return _div(a, b)
        return _BINARY[e.op](a, b)
    if isinstance(e, Call) and e.fn == "abs":
        return abs(_eval(e.args[0], env, holes))
    raise TypeError(f"cannot evaluate {e!r}")


class _Returned(Exception):
    def __init__(self, value):
        self.value = value


def _run(body, env, holes, events):
    for s in body:
        if isinstance(s, Assign):
            env[s.target] = _eval(s.expr, env, holes)
        elif isinstance(s, Declare):
            pass
        elif isinstance(s, If):
            _run(s.then if _eval(s.cond, env, holes) else s.orelse, env, holes, events)
        elif isinstance(s, For):
            i = s.start
            while i < s.stop:
                env[s.var] = float(i)
                _run(s.body, env, holes, events)
                i += s.step
        elif isinstance(s, Return):
            raise _Returned(_eval(s.expr, env, holes))
        elif isinstance(s, Assert):
            events.append(bool(_eval(s.event, env, holes)))
        else:
            raise TypeError(s)


def interpret(ast: Sketch, holes: dict, x) -> tuple[int, tuple[bool, ...]]:
    """Output bit and assert-event values in execution order for one input."""
    missing = [h.id for h in ast.holes if h.id not in holes]
    if missing:
        raise ContractError(f"holes without values: {missing}")
    x = [float(v) for v in x]
    if len(x) != ast.dim:
        raise ContractError(f"input dimension {len(x)} does not match sketch dimension {ast.dim}")
    env = dict(zip(ast.input_names, x))
    events: list[bool] = []
    try:
        _run(ast.body, env, {k: float(v) for k, v in holes.items()}, events)
    except _Returned as r:
        return int(bool(r.value)), tuple(events)
    raise ContractError("execution fell off the end without returning")
