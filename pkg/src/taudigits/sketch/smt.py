"""SMT-LIB2 encoding of synthesis queries and the external solver bridge.

Each example is executed symbolically with concrete inputs and symbolic holes.
Arithmetic on concrete values is folded in floating point (exactly as the
evaluator computes it) and emitted as exact rationals, so products with
constants such as ``K * (curL - lin)`` stay linear in the holes.  Merged
values at conditionals get a fresh constant to keep terms small.
"""

from __future__ import annotations

import math
import re
import shlex
import shutil
import subprocess
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..core import ConfigError, Unknown
from ..exprs import Binary, BoolLit, Call, Hole, Num, Unary, Var
from .ast import Sketch
from .interp import Ops, State, execute, run_batch

REAL, BOOL = "Real", "Bool"


class SolverError(RuntimeError):
    """The solver process failed in a way that says nothing about satisfiability."""


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class Sym:
    term: str
    sort: str


def real_literal(v: float) -> str:
    if not math.isfinite(v):
        raise EncodingError(f"non-finite constant {v}")
    q = Fraction(v)
    mag = f"{abs(q.numerator)}.0" if q.denominator == 1 else f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    return f"(- {mag})" if q < 0 else mag


def _lit(v) -> str:
    if isinstance(v, Sym):
        return v.term
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return real_literal(float(v))


def _sort(v) -> str:
    if isinstance(v, Sym):
        return v.sort
    return BOOL if isinstance(v, (bool, np.bool_)) else REAL


_FOLD = {
    "+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b, "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
}


class SmtOps(Ops):
    def __init__(self, hole_names: dict[str, str]):
        self.hole_names = hole_names
        self.decls: list[str] = []
        self.nonlinear = False
        self._fresh = 0

    def fresh(self, value: Sym) -> Sym:
        name = f"t{self._fresh}"
        self._fresh += 1
        self.decls.append(f"(declare-const {name} {value.sort})")
        self.decls.append(f"(assert (= {name} {value.term}))")
        return Sym(name, value.sort)

    def bind(self, name, value):
        if isinstance(value, Sym) and value.term.startswith("("):
            return self.fresh(value)
        return value

    def ite(self, cond, a, b):
        if not isinstance(cond, Sym):
            return a if cond else b
        if not isinstance(a, Sym) and not isinstance(b, Sym) and _sort(a) == _sort(b) and a == b:
            return a
        if isinstance(a, Sym) and isinstance(b, Sym) and a.term == b.term:
            return a
        if a is True and b is False:
            return cond
        if a is False and b is True:
            return Sym(f"(not {cond.term})", BOOL)
        return Sym(f"(ite {cond.term} {_lit(a)} {_lit(b)})", _sort(a) if isinstance(a, Sym) else _sort(b))

    def eval(self, e, env):
        if isinstance(e, Num):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Hole):
            return Sym(self.hole_names[e.id], REAL)
        if isinstance(e, Unary):
            v = self.eval(e.operand, env)
            if e.op == "-":
                return Sym(f"(- {v.term})", REAL) if isinstance(v, Sym) else -v
            return Sym(f"(not {v.term})", BOOL) if isinstance(v, Sym) else not v
        if isinstance(e, Call) and e.fn == "abs":
            v = self.eval(e.args[0], env)
            if not isinstance(v, Sym):
                return abs(v)
            v = self.bind("abs", v)
            return Sym(f"(ite (>= {v.term} 0.0) {v.term} (- {v.term}))", REAL)
        if isinstance(e, Binary):
            return self.binary(e.op, self.eval(e.left, env), self.eval(e.right, env))
        raise EncodingError(f"cannot encode {e!r}")

    def binary(self, op, a, b):
        symbolic = isinstance(a, Sym) or isinstance(b, Sym)
        if op in ("&&", "||"):
            short = op == "||"  # value that decides the result on its own
            for x, y in ((a, b), (b, a)):
                if not isinstance(x, Sym):
                    return short if bool(x) == short else y
            return Sym(f"({'and' if op == '&&' else 'or'} {a.term} {b.term})", BOOL)
        if op in ("==", "!=") and _sort(a) != _sort(b):
            # Boolean compared with a 0/1 literal
            boolean, lit = (a, b) if _sort(a) == BOOL else (b, a)
            if not isinstance(boolean, Sym):
                return _FOLD[op](float(boolean), lit)
            positive = (float(lit) == 1.0) == (op == "==")
            return boolean if positive else Sym(f"(not {boolean.term})", BOOL)
        if not symbolic:
            if op == "/":
                if b == 0:
                    raise EncodingError("division by zero in a concrete subterm")
                return a / b
            return _FOLD[op](a, b)
        if op == "*" and isinstance(a, Sym) and isinstance(b, Sym):
            self.nonlinear = True
        if op == "/" and isinstance(b, Sym):
            self.nonlinear = True
        if op == "/" and not isinstance(b, Sym) and b == 0:
            raise EncodingError("division by zero")
        if op == "*" and any(not isinstance(v, Sym) and v == 0 for v in (a, b)):
            return 0.0
        if op == "!=":
            return Sym(f"(not (= {_lit(a)} {_lit(b)}))", BOOL)
        smt_op = {"==": "="}.get(op, op)
        sort = REAL if op in ("+", "-", "*", "/") else BOOL
        return Sym(f"({smt_op} {_lit(a)} {_lit(b)})", sort)


@dataclass
class Encoding:
    text: str
    logic: str
    nonlinear: bool
    hole_names: dict[str, str] = field(default_factory=dict)  # hole id -> SMT symbol


def encode(ast: Sketch, examples) -> Encoding:
    """Build the synthesis query for ``examples``: ``[(x, bit), ...]``."""
    if not ast.is_loop_free:
        raise EncodingError("sketch must be unrolled before encoding")
    holes = ast.holes
    names = {h.id: f"h_{h.id}" for h in holes}
    ops = SmtOps(names)
    body = []
    for x, bit in examples:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if len(x) != ast.dim:
            raise EncodingError(f"example of dimension {len(x)} for a {ast.dim}-input sketch")
        env = {name: float(v) for name, v in zip(ast.input_names, x)}
        ret = execute(ast.body, State(env), ops).ret
        body.extend(ops.decls)
        ops.decls = []
        want = bool(bit)
        if isinstance(ret, Sym):
            body.append(f"(assert {ret.term})" if want else f"(assert (not {ret.term}))")
        elif bool(ret) != want:
            body.append("(assert false)")
    logic = "QF_NRA" if ops.nonlinear else "QF_LRA"
    lines = [f"(set-logic {logic})", "(set-option :produce-models true)"]
    for h in holes:
        n = names[h.id]
        lines.append(f"(declare-const {n} Real)")
        lines.append(f"(assert (and (<= {real_literal(h.lo)} {n}) (<= {n} {real_literal(h.hi)})))")
    lines.extend(body)
    lines.append("(check-sat)")
    if holes:
        lines.append(f"(get-value ({' '.join(names[h.id] for h in holes)}))")
    return Encoding("\n".join(lines) + "\n", logic, ops.nonlinear, names)


def emit_constraints(ast: Sketch, examples) -> str:
    """Self-contained SMT-LIB2 script whose models are hole assignments consistent with ``examples``."""
    return encode(ast, examples).text


# --------------------------------------------------------------------------
# solver process
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    command: str | None = None  # executable path or full command line; auto-detected if None
    timeout_ms: int = 10_000
    retry_unknown: bool = False

    def argv(self) -> list[str]:
        cmd = self.command
        if cmd is None:
            cmd = shutil.which("z3") or shutil.which("cvc5") or shutil.which("cvc4")
            if cmd is None:
                raise ConfigError("no SMT-LIB2 solver found; install z3 or cvc5, or pass --solver")
        parts = shlex.split(cmd)
        exe = parts[0].rsplit("/", 1)[-1]
        if len(parts) == 1:
            if exe.startswith("z3"):
                parts += ["-in", "-smt2", f"-t:{self.timeout_ms}"]
            elif exe.startswith("cvc"):
                parts += ["--lang=smt2", f"--tlimit-per={self.timeout_ms}"]
        return parts

    def available(self) -> bool:
        try:
            exe = self.argv()[0]
        except ConfigError:
            return False
        return shutil.which(exe) is not None


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_sexpr(text: str):
    tokens = _TOKEN.findall(text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise SolverError("truncated solver output")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            items = []
            while pos < len(tokens) and tokens[pos] != ")":
                items.append(read())
            pos += 1
            return items
        if tok == ")":
            raise SolverError("unbalanced solver output")
        return tok

    out = []
    while pos < len(tokens):
        out.append(read())
    return out


def _value(term) -> Fraction:
    if isinstance(term, str):
        return Fraction(term)
    head, *args = term
    vals = [_value(a) for a in args]
    if head == "-" and len(vals) == 1:
        return -vals[0]
    if head == "-":
        return vals[0] - sum(vals[1:])
    if head == "/" and len(vals) == 2:
        return vals[0] / vals[1]
    if head == "+":
        return sum(vals, Fraction(0))
    raise ValueError(f"unsupported model value {term!r}")


def run_solver(text: str, cfg: SolverConfig) -> tuple[str, str]:
    """Run the solver on ``text``; returns (status, remaining output)."""
    argv = cfg.argv()
    try:
        proc = subprocess.run(argv, input=text, capture_output=True, text=True,
                              timeout=cfg.timeout_ms / 1000.0 + 5.0)
    except subprocess.TimeoutExpired:
        return "timeout", ""
    except OSError as exc:
        raise SolverError(f"could not start solver {argv[0]!r}: {exc}") from exc
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    if first in ("sat", "unsat", "unknown"):
        return first, rest
    if "timeout" in out or "canceled" in out:
        return "timeout", ""
    raise SolverError(f"solver exited with code {proc.returncode}: {(out or proc.stderr).strip()[:500]}")


def solve(ast: Sketch, examples, cfg: SolverConfig | None = None):
    """Hole assignment consistent with ``examples``, ``None`` if unrealizable, or :class:`Unknown`."""
    cfg = cfg or SolverConfig()
    examples = list(examples)
    try:
        enc = encode(ast, examples)
    except EncodingError as exc:
        return Unknown(f"encoding: {exc}")
    status, rest = run_solver(enc.text, cfg)
    if status != "sat" and cfg.retry_unknown:
        if status in ("unknown", "timeout"):
            status, rest = run_solver(enc.text, SolverConfig(cfg.command, cfg.timeout_ms * 4))
    if status == "unsat":
        return None
    if status != "sat":
        return Unknown(status)
    holes = {}
    if ast.holes:
        try:
            pairs = parse_sexpr(rest)[0]
            by_name = {name: _value(val) for name, val in pairs}
            holes = {hid: float(by_name[name]) for hid, name in enc.hole_names.items()}
        except (ValueError, KeyError, IndexError, TypeError, ZeroDivisionError) as exc:
            return Unknown(f"unreadable model: {exc}")
    # clamp rounding of exact rationals into the declared ranges
    for h in ast.holes:
        holes[h.id] = min(max(holes[h.id], h.lo), h.hi)
    if examples:
        X = np.array([np.asarray(x, dtype=np.float64).reshape(-1) for x, _ in examples])
        want = np.array([bool(b) for _, b in examples])
        got, _ = run_batch(ast, holes, X)
        if not np.array_equal(got, want):
            return Unknown("model does not reproduce the examples under floating-point evaluation")
    return holes
