"""Tokenizer, expression AST and precedence-climbing parser.

Both the sketch language and the postcondition language are C-flavoured; they
share this expression layer and add their own atoms (holes, ``Pr[...]``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | "op" | "eof"
    text: str
    line: int
    col: int


_UNICODE_OPS = {"∧": "&&", "∨": "||", "¬": "!", "≥": ">=", "≤": "<=", "≠": "!="}
_OPS = ["??", "&&", "||", "==", "!=", "<=", ">=", "++", "+=",
        "+", "-", "*", "/", "<", ">", "=", "!", "(", ")", "[", "]", "{", "}", ";", ","]
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*|/\*.*?\*/)"
    r"|(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>" + "|".join(re.escape(o) for o in _OPS + list(_UNICODE_OPS)) + ")",
    re.S,
)


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "comment":
            newlines = m.group().count("\n")
            if newlines:
                line += newlines
                line_start = pos + m.group().rfind("\n") + 1
        elif kind != "ws":
            value = _UNICODE_OPS.get(m.group(), m.group())
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Hole:
    id: str
    lo: float
    hi: float


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "!"
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class Prob:
    event: object


ARITH_OPS = {"+", "-", "*", "/"}
CMP_OPS = {"<", "<=", ">", ">=", "==", "!="}
BOOL_OPS = {"&&", "||"}
_PRECEDENCE = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
               "+": 5, "-": 5, "*": 6, "/": 6}


def fmt_num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_source(e) -> str:
    """Fully parenthesised source text for an expression."""
    if isinstance(e, Num):
        return fmt_num(e.value) if e.value >= 0 else f"(-{fmt_num(-e.value)})"
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Hole):
        return f"??{e.id}({fmt_num(e.lo)}, {fmt_num(e.hi)})"
    if isinstance(e, Unary):
        return f"{e.op}({to_source(e.operand)})"
    if isinstance(e, Binary):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(to_source(a) for a in e.args)})"
    if isinstance(e, Prob):
        return f"Pr[{to_source(e.event)}]"
    raise TypeError(f"not an expression: {e!r}")


def free_vars(e) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return free_vars(e.operand)
    if isinstance(e, Binary):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        return set().union(*(free_vars(a) for a in e.args))
    if isinstance(e, Prob):
        return free_vars(e.event)
    return set()


def substitute(e, mapping: dict):
    """Replace variables by expressions."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.operand, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.fn, tuple(substitute(a, mapping) for a in e.args))
    if isinstance(e, Prob):
        return Prob(substitute(e.event, mapping))
    return e


def walk(e):
    yield e
    if isinstance(e, Unary):
        yield from walk(e.operand)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk(a)
    elif isinstance(e, Prob):
        yield from walk(e.event)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def lookahead(self, k: int) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek
        return tok.kind in ("op", "ident") and tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek
        if not self.at(text):
            self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def expect_ident(self) -> Token:
        tok = self.peek
        if tok.kind != "ident":
            self.error(f"expected identifier, found {tok.text or 'end of input'!r}", tok)
        return self.next()

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek
        raise ParseError(message, tok.line, tok.col)


AtomHook = Callable[[TokenStream], object]


def parse_expr(ts: TokenStream, atom_hook: AtomHook | None = None, min_prec: int = 1):
    left = _parse_unary(ts, atom_hook)
    while True:
        tok = ts.peek
        prec = _PRECEDENCE.get(tok.text) if tok.kind == "op" else None
        if prec is None or prec < min_prec:
            return left
        ts.next()
        right = parse_expr(ts, atom_hook, prec + 1)
        left = Binary(tok.text, left, right)


def _parse_unary(ts: TokenStream, atom_hook):
    if ts.accept("-"):
        operand = _parse_unary(ts, atom_hook)
        if isinstance(operand, Num):
            return Num(-operand.value)
        return Unary("-", operand)
    if ts.accept("!"):
        return Unary("!", _parse_unary(ts, atom_hook))
    return _parse_atom(ts, atom_hook)


def _parse_atom(ts: TokenStream, atom_hook):
    if atom_hook is not None:
        node = atom_hook(ts)
        if node is not None:
            return node
    tok = ts.peek
    if tok.kind == "num":
        ts.next()
        return Num(float(tok.text))
    if tok.kind == "ident":
        ts.next()
        if tok.text in ("true", "false"):
            return BoolLit(tok.text == "true")
        if ts.at("("):
            ts.next()
            args = []
            if not ts.at(")"):
                args.append(parse_expr(ts, atom_hook))
                while ts.accept(","):
                    args.append(parse_expr(ts, atom_hook))
            ts.expect(")")
            return Call(tok.text, tuple(args))
        return Var(tok.text)
    if ts.accept("("):
        e = parse_expr(ts, atom_hook)
        ts.expect(")")
        return e
    ts.error(f"unexpected {tok.text or 'end of input'!r} in expression", tok)


# --------------------------------------------------------------------------
# typing
# --------------------------------------------------------------------------

REAL, BOOL = "real", "bool"


def infer_type(e, types: dict[str, str], where: Callable[[str], None] | None = None) -> str:
    """Return ``"real"`` or ``"bool"``; ``where`` is called with a message on type errors."""

    def fail(msg):
        if where is not None:
            where(msg)
        raise ParseError(msg)

    if isinstance(e, (Num, Hole, Prob)):
        return REAL
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, Var):
        if e.name not in types:
            fail(f"unknown identifier {e.name!r}")
        return types[e.name]
    if isinstance(e, Unary):
        t = infer_type(e.operand, types, where)
        want = REAL if e.op == "-" else BOOL
        if t != want:
            fail(f"operator {e.op!r} expects a {want} operand")
        return t
    if isinstance(e, Binary):
        lt, rt = infer_type(e.left, types, where), infer_type(e.right, types, where)
        if e.op in ARITH_OPS or e.op in CMP_OPS - {"==", "!="}:
            if lt != REAL or rt != REAL:
                fail(f"operator {e.op!r} expects numeric operands")
            return REAL if e.op in ARITH_OPS else BOOL
        if e.op in ("==", "!="):
            if lt != rt and not _bool_num_mix(e, lt, rt):
                fail(f"operator {e.op!r} compares {lt} with {rt}")
            return BOOL
        if lt != BOOL or rt != BOOL:
            fail(f"operator {e.op!r} expects Boolean operands")
        return BOOL
    if isinstance(e, Call):
        if e.fn == "abs" and len(e.args) == 1:
            if infer_type(e.args[0], types, where) != REAL:
                fail("abs expects a numeric argument")
            return REAL
        fail(f"unknown function {e.fn!r}")
    fail(f"not an expression: {e!r}")


def _bool_num_mix(e: Binary, lt: str, rt: str) -> bool:
    # `ret == 1` style comparisons of a Boolean against a 0/1 literal
    lit = e.right if lt == BOOL else e.left
    return isinstance(lit, Num) and lit.value in (0.0, 1.0)


# --------------------------------------------------------------------------
# evaluation over numpy arrays
# --------------------------------------------------------------------------


def eval_np(e, env: dict, holes: dict | None = None):
    """Evaluate ``e`` elementwise; ``env`` maps names to arrays or scalars."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Hole):
        return holes[e.id]
    if isinstance(e, Unary):
        v = eval_np(e.operand, env, holes)
        return np.negative(v) if e.op == "-" else np.logical_not(v)
    if isinstance(e, Binary):
        a, b = eval_np(e.left, env, holes), eval_np(e.right, env, holes)
        op = e.op
        if op == "+":
            return np.add(a, b)
        if op == "-":
            return np.subtract(a, b)
        if op == "*":
            return np.multiply(a, b)
        if op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.true_divide(a, b)
        if op == "<":
            return np.less(a, b)
        if op == "<=":
            return np.less_equal(a, b)
        if op == ">":
            return np.greater(a, b)
        if op == ">=":
            return np.greater_equal(a, b)
        if op == "==":
            return np.equal(a, b)
        if op == "!=":
            return np.not_equal(a, b)
        if op == "&&":
            return np.logical_and(a, b)
        if op == "||":
            return np.logical_or(a, b)
    if isinstance(e, Call) and e.fn == "abs":
        return np.abs(eval_np(e.args[0], env, holes))
    raise TypeError(f"cannot evaluate {e!r}")
