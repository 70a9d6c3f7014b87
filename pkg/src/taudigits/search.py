"""Trie search over output labelings of a growing sample sequence.

A node ``sigma`` is a 0/1 string labeling the first ``len(sigma)`` samples
together with a program that realizes it (or ``None`` if none exists).  The
scheduler is breadth first: every pending child of the current depth is
explored before a new sample is drawn.  A child is explored by reusing the
parent's program when it already produces the new bit, and by a synthesis
query otherwise.

With a threshold ``tau < 1`` a child is explored only while its Hamming
distance to the specification's labels stays within ``tau * depth`` (or
``tau * len(sigma)``); blocked children are parked and released once the
depth has grown enough.  In adaptive mode ``tau`` follows the error of the
best correct program found so far.
"""

from __future__ import annotations

import csv
import heapq
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (SEARCH_STREAM, ConfigError, InputDistribution, Program, SampleStream, Unknown,
                   sample_digest, sigma_str)
from .oracles import ErrorOracle, ProgramClass, Verifier, VerifierConfig
from .postcondition import Postcondition

ROOT, PROPAGATED, SYNTHESIZED = "root", "propagated", "synthesized"
_EPS = 1e-9


@dataclass
class Node:
    sigma: bytes
    program: object  # Program, None (unrealizable) or Unknown
    origin: str
    flips: int  # disagreements with the specification's labels

    @property
    def alive(self) -> bool:
        return isinstance(self.program, Program)


@dataclass
class Counters:
    synth_queries: int = 0
    propagations: int = 0
    blocked_nodes: int = 0  # currently parked
    blocked_total: int = 0
    ver_calls: int = 0
    unknown: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Best:
    program: Program
    error: object  # core.Estimate
    verdict: object  # oracles.VerifyResult
    time_s: float

    def to_dict(self) -> dict:
        return {
            "program": repr(self.program),
            **self.program.to_dict(),
            "error": self.error.value,
            "ci": list(self.error.interval),
            "verify": self.verdict.to_dict(),
            "found_at_s": self.time_s,
        }


@dataclass
class SearchConfig:
    tau: float = 1.0
    adaptive: bool = False
    threshold_denominator: str = "depth"  # or "length"
    depth_budget: int | None = None
    time_budget_s: float | None = None
    seed: int = 0
    record_trie: bool = False
    target_error: float | None = None  # stop once a correct program this close is found

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise ConfigError("tau must lie in (0, 1]")
        if self.threshold_denominator not in ("depth", "length"):
            raise ConfigError("threshold denominator must be 'depth' or 'length'")
        if self.depth_budget is None and self.time_budget_s is None:
            raise ConfigError("give a depth budget, a time budget, or both")
        if self.depth_budget is not None and self.depth_budget < 0:
            raise ConfigError("depth budget must be nonnegative")
        if self.time_budget_s is not None and self.time_budget_s < 0:
            raise ConfigError("time budget must be nonnegative")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class Search:
    """State of one run; :meth:`step` applies a single rule, :meth:`run` drives it to a budget."""

    def __init__(self, cls: ProgramClass, spec: Program, dist: InputDistribution, post: Postcondition,
                 cfg: SearchConfig, verifier: Verifier | None = None, error_oracle=None,
                 verifier_cfg: VerifierConfig | None = None):
        if spec.dim != cls.dim or dist.dimension != cls.dim:
            raise ConfigError(f"dimension mismatch: class {cls.dim}, spec {spec.dim}, distribution {dist.dimension}")
        self.cls, self.spec, self.dist, self.post, self.cfg = cls, spec, dist, post, cfg
        vcfg = verifier_cfg or VerifierConfig(seed=cfg.seed)
        self.verifier = verifier or Verifier(dist, post, vcfg)
        self.error_oracle = error_oracle or ErrorOracle(spec, dist, vcfg)
        self.samples = SampleStream(dist, cfg.seed, SEARCH_STREAM)
        self.spec_bits = bytearray()
        self.depth = 0
        self.tau = float(cfg.tau)
        self.best: Best | None = None
        self.counters = Counters()
        self.queries_by_depth: list[int] = [0]
        self.nodes: dict[bytes, Node] = {}  # filled only with record_trie
        self.tau_trace: list[tuple[float, float]] = []
        self.depth_series: list[tuple[float, int]] = []
        self.error_series: list[tuple[float, float]] = []
        self.status = "running"
        self._initialized = False
        self._leaves: list[Node] = []  # alive nodes with len(sigma) == depth
        self._pending: list = []  # heap of (len, parent sigma, order, seq, parent, bit)
        self._blocked: dict[int, list] = {}  # flips -> parked (parent, bit) pairs
        self._seq = itertools.count()
        self._start: float | None = None
        self._elapsed = 0.0
        self._best_seen: dict = {}

    # ------------------------------------------------------------------
    # clock

    def now(self) -> float:
        if self._start is None:
            return self._elapsed
        return self._elapsed + time.monotonic() - self._start

    # ------------------------------------------------------------------
    # threshold

    def bound(self, length: int) -> float:
        n = self.depth if self.cfg.threshold_denominator == "depth" else length
        return self.tau * n + _EPS

    def unblocked(self, flips: int, length: int) -> bool:
        return flips <= self.bound(length)

    # ------------------------------------------------------------------
    # rules

    def _initialize(self):
        root = Node(b"", self.spec, ROOT, 0)
        self._record(root)
        self._leaves = [root]
        self.tau_trace.append((self.now(), self.tau))
        self.depth_series.append((self.now(), 0))
        self._consider(self.spec)
        self._initialized = True

    def _deepen(self):
        x = self.samples.draw()
        self.spec_bits.append(int(self.spec(x)))
        self.depth += 1
        self.queries_by_depth.append(0)
        if self.cfg.threshold_denominator == "depth" and self._blocked:
            limit = self.bound(0)
            for flips in sorted(k for k in self._blocked if k <= limit):
                for parent, bit in self._blocked.pop(flips):
                    self.counters.blocked_nodes -= 1
                    self._push(parent, bit)
        leaves, self._leaves = self._leaves, []
        for node in leaves:
            self._push_children(node)
        self.depth_series.append((self.now(), self.depth))

    def _push_children(self, node: Node):
        x = self.samples.points[len(node.sigma)]
        own = int(node.program(x))
        self._push(node, own, 0)
        self._push(node, 1 - own, 1)

    def _push(self, parent: Node, bit: int, order: int | None = None):
        if order is None:
            order = 0 if int(parent.program(self.samples.points[len(parent.sigma)])) == bit else 1
        heapq.heappush(self._pending, (len(parent.sigma) + 1, parent.sigma, order, next(self._seq), parent, bit))

    def _explore(self):
        length, _, _, _, parent, bit = heapq.heappop(self._pending)
        i = length - 1
        flips = parent.flips + (bit != self.spec_bits[i])
        if not self.unblocked(flips, length):
            self._blocked.setdefault(flips, []).append((parent, bit))
            self.counters.blocked_nodes += 1
            self.counters.blocked_total += 1
            return
        sigma = parent.sigma + bytes((bit,))
        x = self.samples.points[i]
        if int(parent.program(x)) == bit:
            node = Node(sigma, parent.program, PROPAGATED, flips)
            self.counters.propagations += 1
        else:
            X = self.samples.points[:length]
            program = self.cls.synth(X, np.frombuffer(sigma, dtype=np.uint8).astype(bool))
            self.counters.synth_queries += 1
            self.queries_by_depth[length] += 1
            if isinstance(program, Unknown):
                self.counters.unknown += 1
            node = Node(sigma, program, SYNTHESIZED, flips)
        self._record(node)
        if not node.alive:
            return
        if node.origin == SYNTHESIZED:
            self._consider(node.program)
        if length < self.depth:
            self._push_children(node)
        else:
            self._leaves.append(node)

    def _consider(self, program: Program):
        """Best rule: keep the correct program of least error (earliest wins ties)."""
        key = program.key()
        if key in self._best_seen:
            return
        self._best_seen[key] = True
        verdict = self.verifier(program)
        self.counters.ver_calls += 1
        if not verdict.accepted:
            return
        err = self.error_oracle(program)
        if self.best is not None and err.value >= self.best.error.value:
            return
        t = self.now()
        self.best = Best(program, err, verdict, t)
        self.error_series.append((t, err.value))
        if self.cfg.adaptive and err.value < self.tau:
            self.tau = err.value
            self.tau_trace.append((t, self.tau))

    def _record(self, node: Node):
        if self.cfg.record_trie:
            self.nodes[node.sigma] = node

    def step(self) -> str | None:
        """Apply one rule; returns its name, or ``None`` when the depth budget is exhausted."""
        if not self._initialized:
            self._initialize()
            return "initialize"
        if self._pending:
            self._explore()
            return "explore"
        if self.cfg.depth_budget is not None and self.depth >= self.cfg.depth_budget:
            return None
        self._deepen()
        return "deepen"

    # ------------------------------------------------------------------
    # driver

    def _target_reached(self) -> bool:
        t = self.cfg.target_error
        return t is not None and self.best is not None and self.best.error.value <= t

    def run(self) -> "Search":
        budget = self.cfg.time_budget_s
        if budget is not None and budget <= 0:
            self.status = "time_budget"
            return self
        self._start = time.monotonic()
        try:
            while True:
                if budget is not None and self.now() >= budget:
                    self.status = "time_budget"
                    break
                if self._target_reached():
                    self.status = "target_error"
                    break
                if self.step() is None:
                    self.status = "depth_budget"
                    break
        finally:
            self._elapsed = self.now()
            self._start = None
        return self

    # ------------------------------------------------------------------
    # inspection

    @property
    def sample_points(self) -> np.ndarray:
        return self.samples.points

    def explored(self) -> dict[str, object]:
        """Recorded trie as ``{sigma text: program or None}`` (requires ``record_trie``)."""
        return {sigma_str(s): (n.program if n.alive else None) for s, n in self.nodes.items()}

    def report(self) -> dict:
        return {
            "best": self.best.to_dict() if self.best else None,
            "depth": self.depth,
            "status": self.status,
            "wall_s": self._elapsed if self._start is None else self.now(),
            "tau": self.tau,
            "counters": self.counters.to_dict(),
            "queries_by_depth": list(self.queries_by_depth),
            "tau_trace": [list(p) for p in self.tau_trace],
            "series": {
                "depth": [list(p) for p in self.depth_series],
                "best_error": [list(p) for p in self.error_series],
            },
            "sample_hash": sample_digest(self.samples.points),
            "config": {
                **self.cfg.to_dict(),
                "class": self.cls.to_dict(),
                "spec": self.spec.to_dict(),
                "postcondition": str(self.post),
                "distribution": self.dist.to_dict(),
                "verify_samples": self.verifier.cfg.n,
                "confidence": self.verifier.cfg.confidence,
            },
        }


def run_search(cls, spec, dist, post, **kwargs) -> Search:
    verifier_cfg = kwargs.pop("verifier_cfg", None)
    return Search(cls, spec, dist, post, SearchConfig(**kwargs), verifier_cfg=verifier_cfg).run()


def write_report(search_or_report, outdir: str | Path) -> Path:
    """Write ``report.json``, ``depth_vs_time.csv`` and ``error_vs_time.csv`` into ``outdir``."""
    report = search_or_report.report() if isinstance(search_or_report, Search) else search_or_report
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, default=_json_default) + "\n")
    for name, series in (("depth_vs_time.csv", report["series"]["depth"]),
                         ("error_vs_time.csv", report["series"]["best_error"])):
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "value"])
            w.writerows(series)
    return out


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(f"not JSON serializable: {obj!r}")


# --------------------------------------------------------------------------
# reference: enumerate every labeling of a fixed sample set
# --------------------------------------------------------------------------


@dataclass
class NaiveResult:
    realizable: dict = field(default_factory=dict)  # sigma text -> program
    best: Program | None = None
    best_error: float | None = None
    queries: int = 0


def naive_digits(cls: ProgramClass, points: np.ndarray, verify_fn, error_fn) -> NaiveResult:
    """Synthesize for all ``2^m`` labelings of ``points`` and keep the best correct program."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, cls.dim)
    m = len(points)
    out = NaiveResult()
    for bits in itertools.product((0, 1), repeat=m):
        p = cls.synth(points, np.array(bits, dtype=bool))
        out.queries += 1
        if isinstance(p, Program):
            out.realizable["".join(map(str, bits))] = p
    for p in out.realizable.values():
        if verify_fn(p):
            e = error_fn(p)
            if out.best_error is None or e < out.best_error:
                out.best, out.best_error = p, e
    return out
