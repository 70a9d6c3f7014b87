import csv
import io
import json
from pathlib import Path

import pytest

from taudigits.bench import (SUMMARY_COLUMNS, benchmark_from_dict, build_problem, gen_fairness, gen_synthetic,
                             gen_thermostat, load_benchmark, run_experiment, shipped_benchmarks)
from taudigits.cli import main
from taudigits.core import ConfigError, hoeffding_half_width
from taudigits.oracles import SketchClass
from taudigits.sketch import SolverConfig

BENCH_DIR = Path(__file__).resolve().parents[1] / "bench"


def test_gen_synthetic():
    b = gen_synthetic(1, 0.1)
    assert b.name == "synthetic_d1_b01"
    assert b.problem["spec"] == {"class": "box", "lo": [0.0], "hi": [0.2]}
    assert b.params["optimum_error"] == 0.1
    assert [r.tau_mode for r in b.runs] == ["adaptive", 0.15, 0.3, 0.5, 1.0]
    b2 = gen_synthetic(2, 0.05)
    assert b2.problem["spec"]["lo"] == [0.0, -1.0] and b2.problem["spec"]["hi"] == [0.1, 1.0]
    assert b2.params["vc_dim"] == 4
    assert 0.07 in [r.tau_mode for r in b2.runs]
    with pytest.raises(ConfigError):
        gen_synthetic(4, 0.1)


def test_gen_thermostat():
    b = gen_thermostat(5, 8)
    pr = build_problem(b)
    assert isinstance(pr.cls, SketchClass)
    assert len(pr.cls.ast.holes) == 3
    assert len(pr.post.terms) == 8
    assert len(build_problem(gen_thermostat(40, 2)).post.terms) == 43
    assert pr.spec.predict([[70.0, 75.0]]).tolist() == [0]


def test_gen_fairness():
    for size in "sml":
        pr = build_problem(gen_fairness(size))
        assert pr.cls.dim == pr.dist.dimension == pr.spec.dim


def test_shipped_files_match_generators():
    names = {b.name for b in shipped_benchmarks()}
    files = {p.stem for p in BENCH_DIR.glob("*.json")}
    assert names == files
    assert len(files) == 24
    for b in shipped_benchmarks():
        assert load_benchmark(BENCH_DIR / f"{b.name}.json").to_dict() == b.to_dict()


def test_load_validation(tmp_path):
    obj = gen_synthetic(1, 0.2).to_dict()
    obj["runs"].append({"tau_mode": 0.15, "time_budget_s": 1, "seed": 0})
    with pytest.raises(ConfigError, match="below"):
        benchmark_from_dict(obj)
    obj = gen_synthetic(1, 0.1).to_dict()
    obj["problem"]["class"] = {"name": "sketch", "path": "nope.skh"}
    with pytest.raises(ConfigError, match="does not exist"):
        benchmark_from_dict(obj, tmp_path)
    with pytest.raises(ConfigError):
        benchmark_from_dict({"problem": {}})


def _short(b, seconds=None, depth=None, seeds=(0,)):
    obj = b.to_dict()
    obj["runs"] = [{"tau_mode": m, "time_budget_s": seconds, "depth_budget": depth, "seed": s}
                   for s in seeds for m in ("adaptive", 1.0)]
    return benchmark_from_dict(obj)


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_experiment_outputs(tmp_path):
    b = _short(gen_synthetic(1, 0.1), depth=25, seeds=(0, 1))
    rows = run_experiment(b, tmp_path, verify_samples=2000)
    summary = _read(tmp_path / "summary.csv")
    assert list(summary[0].keys()) == SUMMARY_COLUMNS
    assert len(summary) == 4
    for seed in (0, 1):
        hashes = {r["sample_hash"] for r in summary if r["seed"] == str(seed)}
        assert len(hashes) == 1
    hw = hoeffding_half_width(2000, 1 - 0.05 / 5)
    for r in rows:
        assert r["final_depth"] == 25
        if r["best_error"] != "":
            assert r["best_error"] >= 0.1 - 2 * hw
    rep = tmp_path / b.name / "adaptive_seed0"
    assert json.loads((rep / "report.json").read_text())["benchmark"]["name"] == b.name
    assert (rep / "error_vs_time.csv").exists()
    assert (tmp_path / "depth_ratio.csv").exists()


def test_run_experiment_rerun_identical(tmp_path):
    b = _short(gen_synthetic(2, 0.2), depth=12)
    strip = [{k: v for k, v in r.items() if k != "wall_s"} for r in run_experiment(b, tmp_path / "a", verify_samples=500)]
    again = [{k: v for k, v in r.items() if k != "wall_s"} for r in run_experiment(b, tmp_path / "b", verify_samples=500)]
    assert strip == again


def test_run_experiment_zero_budget(tmp_path):
    rows = run_experiment(_short(gen_synthetic(1, 0.1), seconds=0), tmp_path)
    assert all(r["final_depth"] == 0 and r["best_error"] == "" for r in rows)


def test_sketch_benchmark_without_solver(tmp_path):
    rows = run_experiment(_short(gen_thermostat(5, 8), seconds=1), tmp_path,
                          solver=SolverConfig(command="/nonexistent/solver"))
    assert all(r["status"].startswith("skipped") for r in rows)


def _cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_synth(capsys):
    code, out, _ = _cli(capsys, "synth", "--class", "interval", "--spec", "0.3", "--post", "Pr[ret==1] >= 0.5",
                        "--depth-budget", "50")
    assert code == 0
    rep = json.loads(out)
    assert rep["depth"] == 50 and rep["counters"]["synth_queries"] == 1275
    assert rep["best"]["error"] is not None


def test_cli_missing_file(capsys, tmp_path):
    code, _, err = _cli(capsys, "run", str(tmp_path / "missing.json"))
    assert code == 2 and "not found" in err


def test_cli_bad_args(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--class", "interval"])
    assert exc.value.code == 2
    code, _, _ = _cli(capsys, "synth", "--class", "interval", "--spec", "0.3", "--post", "x > 1",
                      "--depth-budget", "3")
    assert code == 2


def test_cli_analyze(capsys):
    code, out, _ = _cli(capsys, "analyze", "--class", "interval", "--m-max", "30")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [int(r["measured_queries"]) for r in rows] == [m * (m + 1) // 2 for m in range(1, 31)]
    assert all(r["measured_queries"] == r["lemma1_prediction"] for r in rows)
    assert float(rows[-1]["tail_exact"]) <= float(rows[-1]["tail_kl"]) <= float(rows[-1]["tail_hoeffding"])


def test_cli_analyze_box(capsys):
    code, out, _ = _cli(capsys, "analyze", "--class", "box", "--dim", "2", "--m-max", "10", "--seed", "3")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(r["measured_queries"] == r["lemma1_prediction"] for r in rows)


def test_cli_run(capsys, tmp_path):
    path = tmp_path / "b.json"
    gen_synthetic(1, 0.1).save(path)
    code, out, _ = _cli(capsys, "run", str(path), "--depth-budget", "15", "--tau", "1.0",
                        "--out", str(tmp_path / "o"), "--verify-samples", "1000")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["tau_mode"] for r in rows] == ["tau1"]
    assert rows[0]["final_depth"] == "15"
    assert (tmp_path / "o" / "summary.csv").exists()


def test_cli_sketch_check(capsys, tmp_path):
    from taudigits.sketch import builtin_source
    f = tmp_path / "t.skh"
    f.write_text(builtin_source("thermostat"))
    code, out, _ = _cli(capsys, "sketch", "check", str(f), "--const", "Unrollings=5", "--const", "N=8",
                        "--holes", "h=3,tOn=-5,tOff=5", "--input", "75,75")
    assert code == 0
    info = json.loads(out)
    assert info["asserts"] == 4 and info["asserts_unrolled"] == 8
    assert info["output"] == 0
    code, out, _ = _cli(capsys, "sketch", "check", str(f), "--const", "Unrollings=2", "--const", "N=8",
                        "--emit", "70,75:1")
    assert code == 0 and "(check-sat)" in out
    code, _, err = _cli(capsys, "sketch", "check", str(f))
    assert code == 2 and "non-constant loop bound" in err
