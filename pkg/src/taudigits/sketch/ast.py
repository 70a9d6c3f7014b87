"""Statement-level AST for loop-free sketches (plus bounded ``for`` loops before unrolling)."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exprs import Hole, Num, Var, fmt_num, substitute, to_source, walk


@dataclass(frozen=True)
class Assign:
    target: str
    expr: object
    decl: str | None = None  # declared C type, if this is a declaration


@dataclass(frozen=True)
class Declare:
    target: str
    decl: str


@dataclass(frozen=True)
class If:
    cond: object
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class For:
    var: str
    start: int
    stop: int
    step: int
    body: tuple

    @property
    def trip_count(self) -> int:
        return len(range(self.start, self.stop, self.step))


@dataclass(frozen=True)
class Return:
    expr: object


@dataclass(frozen=True)
class Assert:
    event: object
    theta: float


@dataclass(frozen=True)
class Sketch:
    name: str
    ret_type: str
    inputs: tuple  # ((c_type, name), ...)
    body: tuple
    constants: tuple = field(default=(), compare=False)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(name for _, name in self.inputs)

    @property
    def dim(self) -> int:
        return len(self.inputs)

    @property
    def holes(self) -> tuple[Hole, ...]:
        seen: dict[str, Hole] = {}
        for e in iter_exprs(self.body):
            for node in walk(e):
                if isinstance(node, Hole) and node.id not in seen:
                    seen[node.id] = node
        return tuple(seen.values())

    @property
    def asserts(self) -> tuple[Assert, ...]:
        """Assert statements in program order (a loop body's asserts appear once)."""
        return tuple(s for s in iter_stmts(self.body) if isinstance(s, Assert))

    @property
    def is_loop_free(self) -> bool:
        return not any(isinstance(s, For) for s in iter_stmts(self.body))

    def event_names(self) -> tuple[str, ...]:
        return tuple(f"assert_{i}" for i in range(len(self.asserts)))


def iter_stmts(body):
    for s in body:
        yield s
        if isinstance(s, If):
            yield from iter_stmts(s.then)
            yield from iter_stmts(s.orelse)
        elif isinstance(s, For):
            yield from iter_stmts(s.body)


def iter_exprs(body):
    for s in iter_stmts(body):
        if isinstance(s, Assign):
            yield s.expr
        elif isinstance(s, If):
            yield s.cond
        elif isinstance(s, Return):
            yield s.expr
        elif isinstance(s, Assert):
            yield s.event


# --------------------------------------------------------------------------
# unrolling
# --------------------------------------------------------------------------


def _subst_body(body, mapping):
    out = []
    for s in body:
        if isinstance(s, Assign):
            out.append(Assign(s.target, substitute(s.expr, mapping), s.decl))
        elif isinstance(s, If):
            out.append(If(substitute(s.cond, mapping), _subst_body(s.then, mapping),
                          _subst_body(s.orelse, mapping)))
        elif isinstance(s, For):
            out.append(For(s.var, s.start, s.stop, s.step, _subst_body(s.body, mapping)))
        elif isinstance(s, Return):
            out.append(Return(substitute(s.expr, mapping)))
        elif isinstance(s, Assert):
            out.append(Assert(substitute(s.event, mapping), s.theta))
        else:
            out.append(s)
    return tuple(out)


def _unroll_body(body):
    out = []
    for s in body:
        if isinstance(s, For):
            inner = _unroll_body(s.body)
            for i in range(s.start, s.stop, s.step):
                out.extend(_subst_body(inner, {s.var: Num(float(i))}))
        elif isinstance(s, If):
            out.append(If(s.cond, _unroll_body(s.then), _unroll_body(s.orelse)))
        else:
            out.append(s)
    return tuple(out)


def unroll(ast: Sketch) -> Sketch:
    """Replace every constant-bound loop by copies of its body."""
    if ast.is_loop_free:
        return ast
    return Sketch(ast.name, ast.ret_type, ast.inputs, _unroll_body(ast.body), ast.constants)


# --------------------------------------------------------------------------
# printing
# --------------------------------------------------------------------------


def _print_body(body, indent: int, lines: list[str]):
    pad = "    " * indent
    for s in body:
        if isinstance(s, Assign):
            prefix = f"{s.decl} " if s.decl else ""
            lines.append(f"{pad}{prefix}{s.target} = {to_source(s.expr)};")
        elif isinstance(s, Declare):
            lines.append(f"{pad}{s.decl} {s.target};")
        elif isinstance(s, If):
            lines.append(f"{pad}if ({to_source(s.cond)}) {{")
            _print_body(s.then, indent + 1, lines)
            if s.orelse:
                lines.append(f"{pad}}} else {{")
                _print_body(s.orelse, indent + 1, lines)
            lines.append(f"{pad}}}")
        elif isinstance(s, For):
            lines.append(f"{pad}for (int {s.var} = {s.start}; {s.var} < {s.stop}; "
                         f"{s.var} = {s.var} + {s.step}) {{")
            _print_body(s.body, indent + 1, lines)
            lines.append(f"{pad}}}")
        elif isinstance(s, Return):
            lines.append(f"{pad}return {to_source(s.expr)};")
        elif isinstance(s, Assert):
            lines.append(f"{pad}assert({to_source(s.event)}; {fmt_num(s.theta)});")
        else:
            raise TypeError(f"unknown statement {s!r}")


def to_text(ast: Sketch) -> str:
    params = ", ".join(f"{t} {n}" for t, n in ast.inputs)
    lines = [f"{ast.ret_type} {ast.name}({params}) {{"]
    _print_body(ast.body, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


__all__ = ["Assign", "Declare", "If", "For", "Return", "Assert", "Sketch", "Hole", "Var",
           "unroll", "to_text", "iter_stmts", "iter_exprs"]
