"""Probabilistic postconditions: Boolean combinations of inequalities over ``Pr[B]`` terms.

Inside ``Pr[...]`` the event may mention the program output ``ret``, the input
coordinates ``x1 .. xd`` (``x`` when d = 1), a sketch's own input names, and
sketch assert events ``assert_0``, ``assert_1``, ...

>>> post = parse_postcondition("Pr[ret == 1] >= 0.5")
>>> post.evaluate({post.terms[0]: 0.6}).accepted
True
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .exprs import (BOOL, REAL, Binary, BoolLit, Call, Num, ParseError, Prob,
                    TokenStream, Unary, Var, eval_np, free_vars, infer_type, parse_expr, to_source,
                    tokenize, walk)

LOW_CONDITIONING = 0.01
_BOOL_NAMES = re.compile(r"ret|assert_\d+")


class Degenerate(ArithmeticError):
    """A ratio's denominator was estimated as zero."""


def _pr_atom(ts: TokenStream):
    tok = ts.peek
    if tok.kind == "ident" and tok.text == "Pr" and ts.lookahead(1).text == "[":
        ts.next()
        ts.next()
        event = parse_expr(ts, _no_nested_pr)
        ts.expect("]")
        return Prob(event)
    return None


def _no_nested_pr(ts: TokenStream):
    tok = ts.peek
    if tok.kind == "ident" and tok.text == "Pr" and ts.lookahead(1).text == "[":
        ts.error("probability terms cannot be nested", tok)
    return None


def _event_types(event) -> dict[str, str]:
    return {v: BOOL if _BOOL_NAMES.fullmatch(v) else REAL for v in free_vars(event)}


def _check_outer(e, where):
    """Outside ``Pr[...]`` only numbers, probability terms and operators may appear."""
    if isinstance(e, (Num, BoolLit, Prob)):
        return
    if isinstance(e, (Var, Call)):
        raise ParseError(f"{to_source(e)!r} must appear inside Pr[...]", *where)
    if isinstance(e, Unary):
        _check_outer(e.operand, where)
    elif isinstance(e, Binary):
        _check_outer(e.left, where)
        _check_outer(e.right, where)


@dataclass(frozen=True)
class Evaluation:
    accepted: bool
    degenerate: bool = False
    low_conditioning: bool = False


@dataclass(frozen=True)
class Postcondition:
    expr: object
    text: str = field(default="", compare=False)

    @property
    def terms(self) -> tuple[Prob, ...]:
        seen: dict[Prob, None] = {}
        for node in walk(self.expr):
            if isinstance(node, Prob):
                seen.setdefault(node, None)
        return tuple(seen)

    def variables(self) -> set[str]:
        out: set[str] = set()
        for t in self.terms:
            out |= free_vars(t.event)
        return out

    def evaluate(self, values: dict) -> Evaluation:
        """Truth value given an estimate for every probability term."""
        flags = {"low": False}
        try:
            ok = bool(self._eval(self.expr, values, flags))
        except Degenerate:
            return Evaluation(False, degenerate=True, low_conditioning=True)
        return Evaluation(ok, low_conditioning=flags["low"])

    def _eval(self, e, values, flags):
        if isinstance(e, Num):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, Prob):
            return values[e]
        if isinstance(e, Unary):
            v = self._eval(e.operand, values, flags)
            return -v if e.op == "-" else not v
        op = e.op
        if op == "&&":
            return bool(self._eval(e.left, values, flags)) and bool(self._eval(e.right, values, flags))
        if op == "||":
            return bool(self._eval(e.left, values, flags)) or bool(self._eval(e.right, values, flags))
        a, b = self._eval(e.left, values, flags), self._eval(e.right, values, flags)
        if op == "/":
            if b == 0:
                raise Degenerate(to_source(e.right))
            if abs(b) < LOW_CONDITIONING:
                flags["low"] = True
            return a / b
        return {"+": a + b, "-": a - b, "*": a * b, "<": a < b, "<=": a <= b, ">": a > b,
                ">=": a >= b, "==": a == b, "!=": a != b}[op]

    def term_values(self, env: dict) -> dict[Prob, float]:
        """Fraction of points on which each event holds; ``env`` maps names to per-point arrays."""
        out = {}
        for t in self.terms:
            v = np.asarray(eval_np(t.event, env), dtype=bool)
            out[t] = float(v.mean()) if v.ndim else float(bool(v))
        return out

    def __str__(self):
        return self.text or to_source(self.expr)


def parse_postcondition(text: str) -> Postcondition:
    ts = TokenStream(tokenize(text))
    expr = parse_expr(ts, _pr_atom)
    if ts.peek.kind != "eof":
        ts.error(f"unexpected {ts.peek.text!r} after the postcondition")
    _check_outer(expr, (1, 1))
    if not any(isinstance(n, Prob) for n in walk(expr)):
        raise ParseError("postcondition has no Pr[...] term", 1, 1)
    for node in walk(expr):
        if isinstance(node, Prob) and infer_type(node.event, _event_types(node.event)) != BOOL:
            raise ParseError(f"event {to_source(node.event)!r} is not Boolean", 1, 1)
    if infer_type(expr, {}) != BOOL:
        raise ParseError("postcondition must be a comparison or a Boolean combination of them", 1, 1)
    return Postcondition(expr, text.strip())


def conjunction(terms: list[tuple[str, float]]) -> Postcondition:
    """``Pr[e1] > t1 && Pr[e2] > t2 && ...`` for (event text, threshold) pairs."""
    return parse_postcondition(" && ".join(f"Pr[{e}] > {t!r}" for e, t in terms))


__all__ = ["Postcondition", "Evaluation", "parse_postcondition", "conjunction", "LOW_CONDITIONING"]
