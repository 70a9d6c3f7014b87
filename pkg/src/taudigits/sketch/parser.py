"""Parser and semantic checks for the C-style sketch language.

Surface syntax::

    int interval(double x) {
        double a = ??(0, 1);
        if (0 <= x && x <= a) { return 1; }
        return 0;
    }

Holes are written ``??(lo, hi)`` or ``??name(lo, hi)``.  An unnamed hole that
is the first hole on the right of an assignment is named after the assigned
variable; other unnamed holes become ``h0``, ``h1``, ...  Loops must have
constant bounds and ``assert(event; theta)`` statements may not sit inside a
conditional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..exprs import (BOOL, REAL, Binary, BoolLit, Hole, Num, ParseError, TokenStream, Var,
                     free_vars, infer_type, parse_expr, tokenize, walk)
from .ast import Assert, Assign, Declare, For, If, Return, Sketch, iter_stmts

C_TYPES = {"double": REAL, "float": REAL, "int": REAL, "bool": BOOL}
_KEYWORDS = {"if", "else", "for", "return", "assert", "true", "false"} | set(C_TYPES)


class SketchError(ParseError):
    """Syntax or semantic error in a sketch."""


@dataclass
class _HoleNamer:
    used: dict = field(default_factory=dict)
    anon: int = 0
    target: str | None = None
    target_used: bool = False

    def make(self, explicit: str | None, lo: float, hi: float, tok) -> Hole:
        if lo > hi:
            raise SketchError(f"hole has lo > hi ({lo} > {hi})", tok.line, tok.col)
        if explicit is not None:
            hid = explicit
        elif self.target is not None and not self.target_used and self.target not in self.used:
            hid = self.target
        else:
            while f"h{self.anon}" in self.used:
                self.anon += 1
            hid = f"h{self.anon}"
            self.anon += 1
        self.target_used = True
        prev = self.used.get(hid)
        if prev is not None and (prev.lo, prev.hi) != (lo, hi):
            raise SketchError(f"hole {hid!r} redeclared with different bounds", tok.line, tok.col)
        hole = Hole(hid, lo, hi)
        self.used[hid] = hole
        return hole


def _const_value(e, tok) -> float:
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Binary) and e.op in "+-*/":
        a, b = _const_value(e.left, tok), _const_value(e.right, tok)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else float("nan")}[e.op]
    raise SketchError("expected a constant", tok.line, tok.col)


class _Parser:
    def __init__(self, source: str, constants: Mapping[str, float]):
        self.ts = TokenStream(tokenize(source))
        self.constants = {k: float(v) for k, v in constants.items()}
        self.holes = _HoleNamer()

    # expressions -------------------------------------------------------

    def _atom(self, ts: TokenStream):
        tok = ts.peek
        if tok.kind == "op" and tok.text == "??":
            ts.next()
            name = ts.next().text if ts.peek.kind == "ident" else None
            ts.expect("(")
            lo = _const_value(parse_expr(ts, self._atom), tok)
            ts.expect(",")
            hi = _const_value(parse_expr(ts, self._atom), tok)
            ts.expect(")")
            return self.holes.make(name, lo, hi, tok)
        if tok.kind == "ident" and tok.text in self.constants:
            ts.next()
            return Num(self.constants[tok.text])
        return None

    def expr(self):
        return parse_expr(self.ts, self._atom)

    def const_int(self) -> int:
        tok = self.ts.peek
        e = self.expr()
        if free_vars(e) or any(isinstance(n, Hole) for n in walk(e)):
            raise SketchError("non-constant loop bound", tok.line, tok.col)
        v = _const_value(e, tok)
        if v != int(v):
            raise SketchError("loop bound must be an integer", tok.line, tok.col)
        return int(v)

    # statements --------------------------------------------------------

    def program(self) -> Sketch:
        ts = self.ts
        ret_tok = ts.expect_ident()
        if ret_tok.text not in C_TYPES:
            ts.error(f"expected a return type, found {ret_tok.text!r}", ret_tok)
        name = ts.expect_ident().text
        ts.expect("(")
        inputs = []
        if not ts.at(")"):
            while True:
                t = ts.expect_ident()
                if t.text not in C_TYPES:
                    ts.error(f"expected a parameter type, found {t.text!r}", t)
                inputs.append((t.text, ts.expect_ident().text))
                if not ts.accept(","):
                    break
        ts.expect(")")
        body = self.block()
        if ts.peek.kind != "eof":
            ts.error(f"unexpected {ts.peek.text!r} after the sketch body")
        return Sketch(name, ret_tok.text, tuple(inputs), body,
                      tuple(sorted(self.constants.items())))

    def block(self) -> tuple:
        self.ts.expect("{")
        stmts = []
        while not self.ts.at("}"):
            if self.ts.peek.kind == "eof":
                self.ts.error("unterminated block")
            stmts.extend(self.statement())
        self.ts.expect("}")
        return tuple(stmts)

    def body_or_stmt(self) -> tuple:
        if self.ts.at("{"):
            return self.block()
        return tuple(self.statement())

    def statement(self) -> list:
        ts = self.ts
        tok = ts.peek
        if tok.kind == "op" and tok.text == ";":
            ts.next()
            return []
        if tok.kind != "ident":
            ts.error(f"unexpected {tok.text or 'end of input'!r} at start of statement", tok)
        if tok.text == "if":
            ts.next()
            ts.expect("(")
            cond = self.expr()
            ts.expect(")")
            then = self.body_or_stmt()
            orelse = self.body_or_stmt() if ts.accept("else") else ()
            return [If(cond, then, orelse)]
        if tok.text == "for":
            return [self.for_loop()]
        if tok.text == "return":
            ts.next()
            e = self.expr()
            ts.expect(";")
            return [Return(e)]
        if tok.text == "assert":
            ts.next()
            ts.expect("(")
            event = self.expr()
            ts.expect(";")
            theta_tok = ts.peek
            theta = _const_value(self.expr(), theta_tok)
            if not 0.0 <= theta <= 1.0:
                raise SketchError("assert threshold must lie in [0, 1]", theta_tok.line, theta_tok.col)
            ts.expect(")")
            ts.expect(";")
            return [Assert(event, theta)]
        if tok.text in C_TYPES and ts.lookahead(1).kind == "ident":
            ctype = ts.next().text
            target = ts.expect_ident().text
            if ts.accept(";"):
                return [Declare(target, ctype)]
            ts.expect("=")
            return [self.assignment_rhs(target, ctype)]
        target = ts.expect_ident().text
        if target in _KEYWORDS:
            ts.error(f"unexpected keyword {target!r}", tok)
        ts.expect("=")
        return [self.assignment_rhs(target, None)]

    def assignment_rhs(self, target: str, ctype: str | None) -> Assign:
        self.holes.target, self.holes.target_used = target, False
        e = self.expr()
        self.holes.target = None
        self.ts.expect(";")
        return Assign(target, e, ctype)

    def for_loop(self) -> For:
        ts = self.ts
        head = ts.next()
        ts.expect("(")
        if ts.peek.text in C_TYPES and ts.lookahead(1).kind == "ident":
            ts.next()
        var = ts.expect_ident().text
        ts.expect("=")
        start = self.const_int()
        ts.expect(";")
        if ts.expect_ident().text != var:
            ts.error("loop condition must test the loop variable")
        cmp_tok = ts.next()
        if cmp_tok.text not in ("<", "<="):
            ts.error("loop condition must be '<' or '<='", cmp_tok)
        stop = self.const_int() + (1 if cmp_tok.text == "<=" else 0)
        ts.expect(";")
        step = self.loop_step(var)
        ts.expect(")")
        body = self.body_or_stmt()
        if step <= 0:
            raise SketchError("loop step must be positive", head.line, head.col)
        return For(var, start, stop, step, body)

    def loop_step(self, var: str) -> int:
        ts = self.ts
        if ts.expect_ident().text != var:
            ts.error("loop update must change the loop variable")
        if ts.accept("++"):
            return 1
        if ts.accept("+="):
            return self.const_int()
        ts.expect("=")
        tok = ts.peek
        e = self.expr()
        if isinstance(e, Binary) and e.op == "+" and e.left == Var(var):
            return int(_const_value(e.right, tok))
        raise SketchError("loop update must have the form i = i + c", tok.line, tok.col)


# --------------------------------------------------------------------------
# semantic checks
# --------------------------------------------------------------------------


class _Checker:
    def __init__(self, sketch: Sketch):
        self.sketch = sketch
        self.types = {name: C_TYPES[t] for t, name in sketch.inputs}
        self._loop_vars: set[str] = set()

    def fail(self, msg: str):
        raise SketchError(msg)

    def check(self) -> Sketch:
        assigned = set(self.types)
        body, _, returns = self.body(self.sketch.body, assigned, in_branch=False, in_loop=False)
        if not returns:
            self.fail("not every path ends in a return")
        s = self.sketch
        return Sketch(s.name, s.ret_type, s.inputs, body, s.constants)

    def expr_type(self, e, assigned: set) -> str:
        for name in free_vars(e):
            if name not in self.types:
                self.fail(f"unknown identifier {name!r}")
            if name not in assigned:
                self.fail(f"variable {name!r} is used before it is assigned")
        return infer_type(e, self.types, self.fail)

    def body(self, body, assigned: set, in_branch: bool, in_loop: bool):
        out, returns = [], False
        for s in body:
            s, ret = self.stmt(s, assigned, in_branch, in_loop)
            out.append(s)
            returns = returns or ret
        return tuple(out), assigned, returns

    def stmt(self, s, assigned: set, in_branch: bool, in_loop: bool):
        if isinstance(s, Declare):
            self.declare(s.target, C_TYPES[s.decl])
            return s, False
        if isinstance(s, Assign):
            expr = s.expr
            t = self.expr_type(expr, assigned)
            want = C_TYPES[s.decl] if s.decl else self.types.get(s.target, t)
            if want == BOOL and t == REAL and isinstance(expr, Num) and expr.value in (0.0, 1.0):
                expr, t = BoolLit(expr.value == 1.0), BOOL
            if t != want:
                self.fail(f"cannot assign a {t} value to {want} variable {s.target!r}")
            if s.decl:
                self.declare(s.target, want)
            else:
                self.types[s.target] = want
            if s.target in self._loop_vars:
                self.fail(f"loop variable {s.target!r} is assigned in the loop body")
            assigned.add(s.target)
            return Assign(s.target, expr, s.decl), False
        if isinstance(s, If):
            if self.expr_type(s.cond, assigned) != BOOL:
                self.fail("if condition must be Boolean")
            a_then, a_else = set(assigned), set(assigned)
            then, _, r1 = self.body(s.then, a_then, True, in_loop)
            orelse, _, r2 = self.body(s.orelse, a_else, True, in_loop)
            # a branch that returns imposes nothing on the code after the if
            if r1 and not r2:
                assigned |= a_else
            elif r2 and not r1:
                assigned |= a_then
            else:
                assigned |= a_then & a_else
            return If(s.cond, then, orelse), r1 and r2
        if isinstance(s, For):
            if s.var in self.types:
                self.fail(f"loop variable {s.var!r} shadows another variable")
            self.types[s.var] = REAL
            self._loop_vars.add(s.var)
            inner = set(assigned) | {s.var}
            body, _, ret = self.body(s.body, inner, in_branch, True)
            if ret or any(isinstance(x, Return) for x in iter_stmts(body)):
                self.fail("return inside a loop is not supported")
            self._loop_vars.discard(s.var)
            del self.types[s.var]
            if s.trip_count > 0:
                assigned |= inner - {s.var}
            return For(s.var, s.start, s.stop, s.step, body), False
        if isinstance(s, Return):
            expr = s.expr
            if isinstance(expr, Num):
                if expr.value not in (0.0, 1.0):
                    self.fail("non-Boolean return: only 0, 1 or Boolean expressions may be returned")
                expr = BoolLit(expr.value == 1.0)
            if self.expr_type(expr, assigned) != BOOL:
                self.fail("non-Boolean return: only 0, 1 or Boolean expressions may be returned")
            return Return(expr), True
        if isinstance(s, Assert):
            if in_branch:
                self.fail("assert may not appear inside a conditional")
            if self.expr_type(s.event, assigned) != BOOL:
                self.fail("assert event must be Boolean")
            return s, False
        raise TypeError(s)

    def declare(self, name: str, t: str):
        if name in self.types and self.types[name] != t:
            self.fail(f"variable {name!r} redeclared with a different type")
        self.types[name] = t


def parse(source: str, constants: Mapping[str, float] | None = None) -> Sketch:
    """Parse and check a sketch; ``constants`` substitutes named constants (e.g. ``N``)."""
    try:
        ast = _Parser(source, constants or {}).program()
    except SketchError:
        raise
    except ParseError as exc:
        raise SketchError(exc.message, exc.line, exc.col) from None
    return _Checker(ast).check()


def parse_file(path: str | Path, constants: Mapping[str, float] | None = None) -> Sketch:
    return parse(Path(path).read_text(encoding="utf-8"), constants)
