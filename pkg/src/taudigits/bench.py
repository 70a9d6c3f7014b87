"""Benchmark definitions and the experiment runner.

A benchmark file is JSON::

    {"name": "synthetic_d1_b01",
     "params": {"d": 1, "b": 0.1},
     "problem": {"class": {"name": "box", "dim": 1},
                 "spec": {"class": "box", "lo": [0.0], "hi": [0.2]},
                 "distribution": {"kind": "uniform_box", "lo": [-1.0], "hi": [1.0]},
                 "postcondition": "Pr[ret == 1] >= 0.1"},
     "runs": [{"tau_mode": "adaptive", "time_budget_s": 120, "seed": 0},
              {"tau_mode": 1.0, "time_budget_s": 120, "seed": 0}]}

``tau_mode`` is ``"adaptive"`` or a fixed threshold.  Sketch classes are
``{"name": "sketch", "sketch": "thermostat", "constants": {...}}`` for a
shipped sketch or ``{"name": "sketch", "path": "file.skh", ...}``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .core import (BoxProgram, ConfigError, ConstantProgram, IntervalProgram, Program,
                   distribution_from_dict, thermostat_pre)
from .oracles import BoxClass, IntervalClass, ProgramClass, SketchClass, VerifierConfig
from .postcondition import parse_postcondition
from .search import Search, SearchConfig, write_report
from .sketch import SolverConfig, builtin_source, parse, parse_file, unroll

log = logging.getLogger(__name__)

TAU_GRID = (0.07, 0.15, 0.3, 0.5, 1.0)
SUMMARY_COLUMNS = ["benchmark", "tau_mode", "seed", "final_depth", "best_error", "synth_queries",
                   "wall_s", "sample_hash", "status"]


@dataclass
class RunSpec:
    tau_mode: str | float = "adaptive"
    time_budget_s: float | None = 120.0
    depth_budget: int | None = None
    seed: int = 0

    @property
    def label(self) -> str:
        return "adaptive" if self.tau_mode == "adaptive" else f"tau{float(self.tau_mode):g}"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BenchmarkSpec:
    name: str
    problem: dict
    params: dict = field(default_factory=dict)
    runs: list = field(default_factory=list)
    base_dir: Path | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "params": self.params, "problem": self.problem,
                "runs": [r.to_dict() for r in self.runs]}

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _tau_modes(b: float | None = None) -> list:
    taus = [t for t in TAU_GRID if b is None or t >= b]
    return ["adaptive"] + taus


def _runs(modes, seeds, time_budget_s, depth_budget=None) -> list[RunSpec]:
    return [RunSpec(m, time_budget_s, depth_budget, s) for s in seeds for m in modes]


def fairness_post(ratio: float = 1.0, min_mass: float | None = None) -> str:
    text = (f"Pr[ret == 1 && x1 <= 0] / Pr[x1 <= 0] >= "
            f"{'' if ratio == 1.0 else f'{ratio!r} * '}Pr[ret == 1 && x1 >= 0] / Pr[x1 >= 0]")
    if min_mass is not None:
        text += f" && Pr[ret == 1] >= {min_mass!r}"
    return text


def _cube(d: int) -> dict:
    return {"kind": "uniform_box", "lo": [-1.0] * d, "hi": [1.0] * d}


def gen_synthetic(d: int, b: float, seeds=(0,), time_budget_s: float = 120.0) -> BenchmarkSpec:
    """Box in ``[-1, 1]^d`` whose spec lies entirely on the ``x1 >= 0`` side, with parity constraints."""
    if d not in (1, 2, 3):
        raise ConfigError("synthetic benchmarks have d in {1, 2, 3}")
    if not 0.0 < b < 0.5:
        raise ConfigError("b must lie in (0, 0.5)")
    problem = {
        "class": {"name": "box", "dim": d},
        "spec": {"class": "box", "lo": [0.0] + [-1.0] * (d - 1), "hi": [2.0 * b] + [1.0] * (d - 1)},
        "distribution": _cube(d),
        "postcondition": fairness_post(1.0, b),
    }
    params = {"d": d, "b": b, "vc_dim": 2 * d, "optimum_error": b}
    name = f"synthetic_d{d}_b{str(b).replace('0.', '0')}"
    return BenchmarkSpec(name, problem, params, _runs(_tau_modes(b), seeds, time_budget_s))


def gen_thermostat(unrollings: int, n_threshold: float, seeds=(0,), time_budget_s: float = 600.0,
                   solver_timeout_ms: int = 10_000) -> BenchmarkSpec:
    if unrollings not in (5, 10, 20, 40):
        raise ConfigError("unrollings must be one of 5, 10, 20, 40")
    if n_threshold not in (2, 4, 8):
        raise ConfigError("the return threshold must be one of 2, 4, 8")
    n_asserts = 3 + unrollings
    problem = {
        "class": {"name": "sketch", "sketch": "thermostat",
                  "constants": {"Unrollings": unrollings, "N": n_threshold},
                  "solver_timeout_ms": solver_timeout_ms},
        "spec": {"class": "constant", "value": 0, "dim": 2},
        "distribution": thermostat_pre().to_dict(),
        "postcondition": " && ".join(f"Pr[assert_{i}] > 0.9" for i in range(n_asserts)),
    }
    params = {"unrollings": unrollings, "n_threshold": n_threshold, "asserts": n_asserts}
    return BenchmarkSpec(f"thermostat_u{unrollings}_n{n_threshold}", problem, params,
                         _runs(["adaptive", 1.0], seeds, time_budget_s))


FAIRNESS_SIZES = {
    # size -> (dimension, spec box upper end along x1)
    "s": (1, 0.4),
    "m": (2, 0.6),
    "l": (3, 0.8),
}


def gen_fairness(size: str, seeds=(0,), time_budget_s: float = 600.0) -> BenchmarkSpec:
    """Repair a one-sided box classifier so that the x1 < 0 group gets at least 80% of the other's rate."""
    if size not in FAIRNESS_SIZES:
        raise ConfigError(f"fairness size must be one of {sorted(FAIRNESS_SIZES)}")
    d, top = FAIRNESS_SIZES[size]
    problem = {
        "class": {"name": "box", "dim": d},
        "spec": {"class": "box", "lo": [0.0] + [-0.5] * (d - 1), "hi": [top] + [0.5] * (d - 1)},
        "distribution": _cube(d),
        "postcondition": fairness_post(0.8, top * 0.5 ** (d - 1) / 2.0),
    }
    params = {"size": size, "d": d, "vc_dim": 2 * d}
    return BenchmarkSpec(f"fairness_standin_{size}", problem, params,
                         _runs(["adaptive", 1.0], seeds, time_budget_s))


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------


def load_benchmark(path: str | Path) -> BenchmarkSpec:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read benchmark {path}: {exc}") from exc
    return benchmark_from_dict(obj, path.parent)


def benchmark_from_dict(obj: dict, base_dir: Path | None = None) -> BenchmarkSpec:
    try:
        runs = [RunSpec(**r) for r in obj.get("runs", [])]
        spec = BenchmarkSpec(obj["name"], obj["problem"], obj.get("params", {}), runs, base_dir)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed benchmark: {exc}") from exc
    b = spec.params.get("b")
    for r in runs:
        if r.tau_mode != "adaptive":
            t = float(r.tau_mode)
            if not 0.0 < t <= 1.0:
                raise ConfigError(f"tau {t} outside (0, 1]")
            if b is not None and t < b:
                raise ConfigError(f"tau {t} is below the benchmark mass b = {b}")
    cls = spec.problem.get("class", {})
    if cls.get("name") == "sketch" and "path" in cls:
        p = _resolve(cls["path"], base_dir)
        if not p.exists():
            raise ConfigError(f"sketch file {p} does not exist")
    return spec


def _resolve(p: str, base_dir: Path | None) -> Path:
    q = Path(p)
    return q if q.is_absolute() or base_dir is None else base_dir / q


def build_spec_program(obj: dict) -> Program:
    kind = obj.get("class")
    if kind == "interval":
        return IntervalProgram(obj["a"])
    if kind == "box":
        return BoxProgram(obj["lo"], obj["hi"])
    if kind == "constant":
        return ConstantProgram(obj["value"], obj["dim"])
    raise ConfigError(f"unknown spec program class {kind!r}")


def build_class(obj: dict, base_dir: Path | None = None, solver: SolverConfig | None = None) -> ProgramClass:
    name = obj.get("name")
    if name == "interval":
        return IntervalClass()
    if name == "box":
        return BoxClass(int(obj["dim"]))
    if name == "sketch":
        constants = obj.get("constants", {})
        if "path" in obj:
            ast = parse_file(_resolve(obj["path"], base_dir), constants)
        else:
            ast = parse(builtin_source(obj.get("sketch", "thermostat")), constants)
        if solver is None:
            solver = SolverConfig(obj.get("solver"), int(obj.get("solver_timeout_ms", 10_000)))
        return SketchClass(unroll(ast), solver)
    raise ConfigError(f"unknown program class {name!r}")


@dataclass
class Problem:
    cls: ProgramClass
    spec: Program
    dist: object
    post: object


def build_problem(bench: BenchmarkSpec, solver: SolverConfig | None = None) -> Problem:
    pr = bench.problem
    return Problem(build_class(pr["class"], bench.base_dir, solver), build_spec_program(pr["spec"]),
                   distribution_from_dict(pr["distribution"]), parse_postcondition(pr["postcondition"]))


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


def _fmt(v):
    return "" if v is None else v


def run_experiment(bench: BenchmarkSpec, outdir: str | Path, solver: SolverConfig | None = None,
                   verify_samples: int = 10_000, threshold_denominator: str = "depth",
                   target_error: float | None = None) -> list[dict]:
    """Run every configured run of ``bench``; writes per-run reports and ``summary.csv`` under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    problem = build_problem(bench, solver)
    rows = []
    skip_reason = None
    if isinstance(problem.cls, SketchClass) and not problem.cls.solver.available():
        skip_reason = "skipped: no SMT-LIB2 solver found"
    for run in bench.runs:
        row = {"benchmark": bench.name, "tau_mode": run.label, "seed": run.seed, "final_depth": "",
               "best_error": "", "synth_queries": "", "wall_s": "", "sample_hash": "", "status": ""}
        if skip_reason:
            row["status"] = skip_reason
            rows.append(row)
            continue
        adaptive = run.tau_mode == "adaptive"
        cfg = SearchConfig(tau=1.0 if adaptive else float(run.tau_mode), adaptive=adaptive,
                           threshold_denominator=threshold_denominator, depth_budget=run.depth_budget,
                           time_budget_s=run.time_budget_s, seed=run.seed, target_error=target_error)
        log.info("running %s %s seed=%d", bench.name, run.label, run.seed)
        try:
            search = Search(problem.cls, problem.spec, problem.dist, problem.post, cfg,
                            verifier_cfg=VerifierConfig(n=verify_samples, seed=run.seed)).run()
        except Exception as exc:  # keep going; the failure is recorded in the summary
            log.exception("run failed")
            row["status"] = f"error: {type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        report = search.report()
        report["benchmark"] = {"name": bench.name, "params": bench.params, "run": run.to_dict()}
        write_report(report, outdir / bench.name / f"{run.label}_seed{run.seed}")
        row.update(final_depth=search.depth,
                   best_error=_fmt(search.best.error.value if search.best else None),
                   synth_queries=search.counters.synth_queries, wall_s=round(report["wall_s"], 3),
                   sample_hash=report["sample_hash"], status=search.status)
        rows.append(row)
    write_summary(rows, outdir / "summary.csv")
    _write_depth_ratios(rows, outdir / "depth_ratio.csv")
    return rows


def write_summary(rows: list[dict], path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SUMMARY_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def _write_depth_ratios(rows: list[dict], path: Path):
    """Adaptive over tau = 1 final depth for each (benchmark, seed) that has both."""
    by_key = {}
    for r in rows:
        if r["final_depth"] != "":
            by_key[(r["benchmark"], r["seed"], r["tau_mode"])] = r["final_depth"]
    out = []
    for (name, seed, mode), depth in by_key.items():
        fixed = by_key.get((name, seed, "tau1"))
        if mode == "adaptive" and fixed:
            out.append({"benchmark": name, "seed": seed, "adaptive_depth": depth, "fixed_depth": fixed,
                        "ratio": round(depth / fixed, 4)})
    if not out:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(out[0]))
        w.writeheader()
        w.writerows(out)


def shipped_benchmarks() -> list[BenchmarkSpec]:
    out = [gen_synthetic(d, b) for d in (1, 2, 3) for b in (0.05, 0.1, 0.2)]
    out += [gen_thermostat(u, n) for u in (5, 10, 20, 40) for n in (2, 4, 8)]
    out += [gen_fairness(s) for s in ("s", "m", "l")]
    return out
