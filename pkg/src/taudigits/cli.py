"""Command-line interface.

    taudigits run BENCH.json [--out DIR]
    taudigits synth --class interval --spec 0.3 --post "Pr[ret == 1] >= 0.5" --depth-budget 50
    taudigits analyze --class interval --m-max 30
    taudigits sketch check FILE.skh [--const N=8] [--holes h=1,...] [--input 35,75]

Exit status: 0 on success, 1 on infrastructure failures (solver crashes, I/O
errors), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import count_dichotomies, sauer_bound, tail_bounds, tail_exact
from .bench import RunSpec, build_spec_program, load_benchmark, run_experiment
from .core import (BoxProgram, ConfigError, ConstantProgram, ContractError, IntervalProgram,
                   load_distribution, thermostat_pre, uniform)
from .exprs import ParseError
from .oracles import BoxClass, IntervalClass, SketchClass, VerifierConfig
from .postcondition import parse_postcondition
from .search import Search, SearchConfig, _json_default, write_report
from .sketch import (SolverConfig, SolverError, emit_constraints, evaluate_sketch, parse, to_text,
                     unroll)

log = logging.getLogger("taudigits")


class UsageError(Exception):
    pass


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("search options")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--time-budget-s", type=float, default=None)
    g.add_argument("--depth-budget", type=int, default=None)
    g.add_argument("--tau", type=float, default=None)
    g.add_argument("--adaptive", action="store_true")
    g.add_argument("--threshold-denominator", choices=("depth", "length"), default="depth")
    g.add_argument("--solver", default=None, help="SMT-LIB2 solver executable or command line")
    g.add_argument("--solver-timeout-ms", type=int, default=10_000)
    g.add_argument("--retry-unknown", action="store_true")
    g.add_argument("--verify-samples", type=int, default=10_000)
    g.add_argument("--out", default=None)
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="taudigits", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run a benchmark file")
    run.add_argument("benchmark")
    run.add_argument("--target-error", type=float, default=None,
                     help="stop a run once a correct program with at most this error is found")

    synth = sub.add_parser("synth", parents=[common], help="solve one problem")
    synth.add_argument("--class", dest="cls", choices=("interval", "box", "sketch"), required=True)
    synth.add_argument("--spec", required=True,
                       help="interval: a; box: lo:hi per coordinate, comma separated; const:0 or const:1")
    synth.add_argument("--post", required=True)
    synth.add_argument("--dist", default=None, help="distribution JSON text or file")
    synth.add_argument("--dim", type=int, default=None)
    synth.add_argument("--sketch", default=None, help="sketch file (.skh) for --class sketch")
    synth.add_argument("--const", action="append", default=[], metavar="NAME=VALUE")

    an = sub.add_parser("analyze", parents=[common], help="query counts and bounds as CSV")
    an.add_argument("--class", dest="cls", choices=("interval", "box"), required=True)
    an.add_argument("--dim", type=int, default=1)
    an.add_argument("--m-max", type=int, required=True)
    an.add_argument("--k", type=float, default=0.1, help="disagreement probability for tail columns")

    sk = sub.add_parser("sketch", help="sketch utilities")
    sksub = sk.add_subparsers(dest="sketch_command", required=True)
    chk = sksub.add_parser("check", parents=[common], help="parse, unroll and evaluate a sketch")
    chk.add_argument("file")
    chk.add_argument("--const", action="append", default=[], metavar="NAME=VALUE")
    chk.add_argument("--holes", default=None, help="comma-separated id=value")
    chk.add_argument("--input", default=None, help="comma-separated input vector")
    chk.add_argument("--print", dest="print_ast", action="store_true", help="print the unrolled sketch")
    chk.add_argument("--emit", default=None, metavar="EXAMPLES",
                     help="print the SMT-LIB2 query for examples 'x1,x2:bit;...'")
    return parser


def _parse_constants(items) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"constant {name!r} is not a number") from None
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _solver(args) -> SolverConfig:
    return SolverConfig(args.solver, args.solver_timeout_ms, args.retry_unknown)


def _emit(text: str, out: str | None, name: str):
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text)
    sys.stdout.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_run(args) -> int:
    path = Path(args.benchmark)
    if not path.is_file():
        raise UsageError(f"benchmark file {path} not found")
    bench = load_benchmark(path)
    if args.tau is not None or args.adaptive:
        modes = (["adaptive"] if args.adaptive else []) + ([args.tau] if args.tau is not None else [])
        seeds = sorted({r.seed for r in bench.runs}) or [0]
        template = bench.runs[0] if bench.runs else RunSpec()
        bench.runs = [RunSpec(m, template.time_budget_s, template.depth_budget, s) for s in seeds for m in modes]
    for r in bench.runs:
        if args.seed is not None:
            r.seed = args.seed
        if args.time_budget_s is not None:
            r.time_budget_s = args.time_budget_s
        if args.depth_budget is not None:
            r.depth_budget = args.depth_budget
    out = Path(args.out or "results")
    solver = _solver(args) if args.solver or args.retry_unknown or args.solver_timeout_ms != 10_000 else None
    rows = run_experiment(bench, out, solver=solver, verify_samples=args.verify_samples,
                          threshold_denominator=args.threshold_denominator, target_error=args.target_error)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["benchmark"])
    w.writeheader()
    w.writerows(rows)
    sys.stdout.write(buf.getvalue())
    ok = [r for r in rows if not str(r["status"]).startswith(("error", "skipped"))]
    return 0 if ok or not rows else 1


def _synth_problem(args):
    spec_text = args.spec.strip()
    if args.cls == "interval":
        cls = IntervalClass()
        dist = uniform([0.0], [1.0])
    elif args.cls == "box":
        sides = [s for s in spec_text.split(",") if s] if not spec_text.startswith("const:") else []
        d = args.dim or len(sides) or 1
        cls = BoxClass(d)
        dist = uniform([-1.0] * d, [1.0] * d)
    else:
        if not args.sketch:
            raise UsageError("--class sketch needs --sketch FILE")
        path = Path(args.sketch)
        if not path.is_file():
            raise UsageError(f"sketch file {path} not found")
        ast = parse(path.read_text(encoding="utf-8"), _parse_constants(args.const))
        cls = SketchClass(unroll(ast), _solver(args))
        dist = thermostat_pre() if ast.name == "thermostat" else None
    if args.dist:
        source = Path(args.dist) if Path(args.dist).is_file() else args.dist
        dist = load_distribution(source)
    if dist is None:
        raise UsageError("--dist is required for this sketch")

    if spec_text.startswith("const:"):
        spec = ConstantProgram(int(spec_text[6:]), cls.dim)
    elif args.cls == "interval":
        spec = IntervalProgram(float(spec_text))
    elif args.cls == "box":
        try:
            bounds = [tuple(float(v) for v in side.split(":")) for side in spec_text.split(",")]
            spec = BoxProgram([b[0] for b in bounds], [b[1] for b in bounds])
        except (ValueError, IndexError):
            raise UsageError(f"box spec must look like lo:hi,lo:hi, got {spec_text!r}") from None
    elif spec_text.startswith("{"):
        spec = build_spec_program(json.loads(spec_text))
    else:
        raise UsageError("sketch problems take --spec const:0, const:1 or a JSON program")
    return cls, spec, dist


def _search_config(args) -> SearchConfig:
    if args.depth_budget is None and args.time_budget_s is None:
        raise UsageError("give --depth-budget or --time-budget-s")
    return SearchConfig(tau=args.tau if args.tau is not None else 1.0, adaptive=args.adaptive,
                        threshold_denominator=args.threshold_denominator, depth_budget=args.depth_budget,
                        time_budget_s=args.time_budget_s, seed=args.seed or 0)


def cmd_synth(args) -> int:
    cls, spec, dist = _synth_problem(args)
    post = parse_postcondition(args.post)
    cfg = _search_config(args)
    search = Search(cls, spec, dist, post, cfg,
                    verifier_cfg=VerifierConfig(n=args.verify_samples, seed=cfg.seed)).run()
    report = search.report()
    if args.out:
        write_report(report, args.out)
    sys.stdout.write(json.dumps(report, indent=2, default=_json_default) + "\n")
    return 0


def cmd_analyze(args) -> int:
    if args.m_max < 1:
        raise UsageError("--m-max must be positive")
    if args.cls == "interval":
        cls, dist = IntervalClass(), uniform([0.0], [1.0])
    else:
        cls, dist = BoxClass(args.dim), uniform([-1.0] * args.dim, [1.0] * args.dim)
    tau = args.tau if args.tau is not None else 0.2
    post = parse_postcondition("Pr[true] >= 0")
    search = Search(cls, ConstantProgram(0, cls.dim), dist, post,
                    SearchConfig(depth_budget=args.m_max, seed=args.seed or 0),
                    verifier_cfg=VerifierConfig(n=1, seed=args.seed or 0))
    # only query counts matter here; a one-point verifier pool keeps per-program checks cheap
    search.run()
    X = search.sample_points
    vc = cls.vc_dim
    rows = []
    measured = predicted = envelope = 0
    for m in range(1, args.m_max + 1):
        measured += search.queries_by_depth[m]
        predicted += count_dichotomies(cls, X[: m - 1])
        j = m - 1
        envelope += 2 ** j if j < vc else sauer_bound(vc, j)
        row = {"m": m, "measured_queries": measured, "lemma1_prediction": predicted,
               "sauer_envelope": round(envelope, 6)}
        if 0.0 <= args.k < tau <= 1.0:
            row["tail_exact"] = tail_exact(m, args.k, tau)
            if 0.0 < args.k and tau < 1.0:
                h, kl = tail_bounds(m, args.k, tau)
                row["tail_hoeffding"], row["tail_kl"] = h, kl
        rows.append(row)
    buf = io.StringIO()
    fields = list(rows[-1].keys())
    w = csv.DictWriter(buf, fieldnames=fields)
    w.writeheader()
    w.writerows(rows)
    _emit(buf.getvalue(), args.out, "analysis.csv")
    return 0


def _parse_examples(text: str, dim: int) -> list:
    out = []
    for item in text.split(";"):
        if not item.strip():
            continue
        xs, sep, bit = item.rpartition(":")
        if not sep or bit.strip() not in ("0", "1"):
            raise UsageError(f"example {item!r} must look like x1,x2:bit")
        x = _floats(xs)
        if len(x) != dim:
            raise UsageError(f"example {item!r} has {len(x)} inputs, the sketch takes {dim}")
        out.append((np.array(x), int(bit)))
    return out


def cmd_sketch_check(args) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise UsageError(f"sketch file {path} not found")
    ast = parse(path.read_text(encoding="utf-8"), _parse_constants(args.const))
    flat = unroll(ast)
    info = {
        "name": ast.name,
        "inputs": list(ast.input_names),
        "holes": [{"id": h.id, "lo": h.lo, "hi": h.hi} for h in ast.holes],
        "asserts": len(ast.asserts),
        "asserts_unrolled": len(flat.asserts),
        "loop_free": ast.is_loop_free,
    }
    if args.holes is not None or args.input is not None:
        if args.holes is None or args.input is None:
            raise UsageError("--holes and --input go together")
        holes = _parse_constants(args.holes.split(","))
        out, events = evaluate_sketch(flat, holes, _floats(args.input))
        info["output"] = out
        info["events"] = {name: v for name, v in zip(flat.event_names(), events)}
    if args.print_ast:
        sys.stdout.write(to_text(flat))
    if args.emit is not None:
        sys.stdout.write(emit_constraints(flat, _parse_examples(args.emit, flat.dim)))
    else:
        sys.stdout.write(json.dumps(info, indent=2) + "\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "synth": cmd_synth, "analyze": cmd_analyze, "sketch": cmd_sketch_check}
    try:
        return handlers[args.command](args)
    except (UsageError, ConfigError, ParseError, ContractError, json.JSONDecodeError) as exc:
        print(f"taudigits: error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, OSError) as exc:
        print(f"taudigits: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
