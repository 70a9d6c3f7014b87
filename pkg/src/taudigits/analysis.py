"""Sample-complexity and query-count mathematics.

Dichotomy counts are the number of distinct labelings of a point set that a
program class can realize.  The generic counter enumerates every labeling and
asks the class's exact synthesizer; intervals ``[0, a]`` and boxes have
faster dedicated counters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import BoxProgram, ContractError, IntervalProgram, Program, UniformBox
from .oracles import BoxClass, IntervalClass, ProgramClass

DEFAULT_GRID = 1e-3


@dataclass(frozen=True)
class LearningParams:
    epsilon: float
    delta: float
    vc_dim: int
    alpha: float | None = None

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ContractError("epsilon must lie in (0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ContractError("delta must lie in (0, 1)")
        if self.vc_dim < 1:
            raise ContractError("VC dimension must be a positive integer")
        if self.alpha is not None and self.epsilon > self.alpha:
            raise ContractError("epsilon may not exceed alpha")


@dataclass(frozen=True)
class TailParams:
    m: int
    k: float
    tau: float

    def __post_init__(self):
        if self.m < 0:
            raise ContractError("m must be nonnegative")
        if not 0.0 <= self.k < self.tau <= 1.0:
            raise ContractError("need 0 <= k < tau <= 1")


def vc_cost(p: LearningParams | float, delta: float | None = None, vc_dim: int | None = None) -> int:
    """Samples sufficient for an epsilon-net with probability 1 - delta."""
    if not isinstance(p, LearningParams):
        p = LearningParams(p, delta, vc_dim)
    e, d, k = p.epsilon, p.delta, p.vc_dim
    return math.ceil((4.0 * math.log2(2.0 / d) + 8.0 * k * math.log2(13.0 / e)) / e)


def hoeffding_n(epsilon: float, delta: float) -> int:
    """Samples for a two-sided Hoeffding interval of half-width ``epsilon`` at failure ``delta``."""
    if not (0.0 < epsilon < 1.0 and 0.0 < delta < 1.0):
        raise ContractError("epsilon and delta must lie in (0, 1)")
    return max(1, math.ceil(math.log(2.0 / delta) / (2.0 * epsilon * epsilon)))


# --------------------------------------------------------------------------
# dichotomies
# --------------------------------------------------------------------------


def _as_points(points, dim: int) -> np.ndarray:
    pts = getattr(points, "points", points)
    return np.asarray(pts, dtype=np.float64).reshape(-1, dim)


def count_dichotomies_brute(cls: ProgramClass, points) -> int:
    """Realizable labelings found by trying all ``2^m`` of them."""
    if not cls.exact:
        raise ContractError(f"{cls!r} has no exact synthesizer")
    X = _as_points(points, cls.dim)
    if len(X) > 20:
        raise ContractError("brute-force enumeration is limited to 20 points")
    count = 0
    for bits in itertools.product((False, True), repeat=len(X)):
        if cls.synth(X, np.array(bits, dtype=bool)) is not None:
            count += 1
    return count


def _interval_count(x: np.ndarray) -> int:
    inside = np.unique(x[(x >= 0.0) & (x <= 1.0)])
    return len(inside) + 1 - int(np.any(inside == 0.0))


def _box_masks(X: np.ndarray, idx: np.ndarray, axis: int, out: set):
    """Collect bitmasks of ``X[idx] ∩ box`` over all boxes spanned by the points."""
    coords = np.unique(X[idx, axis])
    last = axis == X.shape[1] - 1
    if last:
        order = idx[np.argsort(X[idx, axis], kind="stable")]
        vals = X[order, axis]
        # group points with equal coordinate so that intervals are taken over distinct values
        groups = []
        for v in coords:
            sel = order[vals == v]
            groups.append(sum(1 << int(i) for i in sel))
        for i in range(len(groups)):
            mask = 0
            for j in range(i, len(groups)):
                mask |= groups[j]
                out.add(mask)
        return
    for i, lo in enumerate(coords):
        for hi in coords[i:]:
            sub = idx[(X[idx, axis] >= lo) & (X[idx, axis] <= hi)]
            _box_masks(X, sub, axis + 1, out)


def _box_count(X: np.ndarray) -> int:
    inside = np.all((X >= -1.0) & (X <= 1.0), axis=1)
    idx = np.flatnonzero(inside)
    masks: set = set()
    if len(idx):
        _box_masks(X, idx, 0, masks)
    return len(masks) + 1  # plus the all-zero labeling


def count_dichotomies(cls: ProgramClass, points, method: str = "auto") -> int:
    """Number of labelings of ``points`` realizable by ``cls``.

    ``method`` is ``"auto"`` (closed form or dedicated counter when available)
    or ``"brute"``.
    """
    X = _as_points(points, cls.dim)
    if method == "brute":
        return count_dichotomies_brute(cls, X)
    if method != "auto":
        raise ContractError(f"unknown counting method {method!r}")
    if isinstance(cls, IntervalClass):
        return _interval_count(X[:, 0])
    if isinstance(cls, BoxClass):
        return _box_count(X)
    return count_dichotomies_brute(cls, X)


def predicted_queries(cls: ProgramClass, points, method: str = "auto") -> int:
    """Synthesis queries of an unthresholded search to depth ``m``: the sum of dichotomy counts of prefixes."""
    X = _as_points(points, cls.dim)
    return sum(count_dichotomies(cls, X[:l], method) for l in range(len(X)))


def predicted_queries_by_depth(cls: ProgramClass, points, method: str = "auto") -> list[int]:
    X = _as_points(points, cls.dim)
    return [0] + [count_dichotomies(cls, X[: l - 1], method) for l in range(1, len(X) + 1)]


def sauer_bound(d: int, m: int) -> float:
    """``(e m / d)^d``, an upper bound on the growth function for ``m >= d``."""
    if d < 1 or m < d:
        raise ContractError("need m >= d >= 1")
    return (math.e * m / d) ** d


# --------------------------------------------------------------------------
# binomial tails
# --------------------------------------------------------------------------


def _threshold(t: TailParams) -> int:
    # tolerate products such as 0.07 * 100 = 7.000000000000001
    return math.floor(t.tau * t.m + 1e-9)


def tail_exact(t: TailParams | int, k: float | None = None, tau: float | None = None) -> float:
    """``Pr[X > floor(tau m)]`` for ``X ~ Binomial(m, k)``, summed in log space."""
    if not isinstance(t, TailParams):
        t = TailParams(t, k, tau)
    m, k = t.m, t.k
    start = _threshold(t) + 1
    if start > m:
        return 0.0
    if k == 0.0:
        return 0.0
    if k == 1.0:
        return 1.0
    lk, l1k = math.log(k), math.log1p(-k)
    lg = math.lgamma
    terms = [lg(m + 1) - lg(i + 1) - lg(m - i + 1) + i * lk + (m - i) * l1k for i in range(start, m + 1)]
    top = max(terms)
    return min(1.0, math.exp(top) * math.fsum(math.exp(v - top) for v in terms))


def tail_bounds(t: TailParams | int, k: float | None = None, tau: float | None = None) -> tuple[float, float]:
    """(Hoeffding bound, relative-entropy bound) on the same tail."""
    if not isinstance(t, TailParams):
        t = TailParams(t, k, tau)
    m, k, tau = t.m, t.k, t.tau
    if not (0.0 < k < tau < 1.0):
        raise ContractError("closed-form bounds need 0 < k < tau < 1; use tail_exact")
    hoeffding = math.exp(-2.0 * m * (tau - k) ** 2)
    kl = tau * math.log(tau / k) + (1.0 - tau) * math.log((1.0 - tau) / (1.0 - k))
    return hoeffding, math.exp(-m * kl)


def failure_bound(delta_net: float, t: TailParams) -> float:
    """Probability that thresholded search misses: net failure plus the binomial tail."""
    if not 0.0 <= delta_net <= 1.0:
        raise ContractError("delta_net must be a probability")
    return min(1.0, delta_net + tail_exact(t))


# --------------------------------------------------------------------------
# epsilon-nets
# --------------------------------------------------------------------------


def _uniform_1d(dist) -> tuple[float, float]:
    if not isinstance(dist, UniformBox) or dist.dimension != 1:
        raise ContractError("epsilon-net checks need a one-dimensional uniform distribution")
    lo, hi = float(dist.lo[0]), float(dist.hi[0])
    if hi <= lo:
        raise ContractError("degenerate uniform distribution")
    return lo, hi


def _count_in(sorted_x: np.ndarray, lo, hi) -> np.ndarray:
    """Points of ``sorted_x`` inside closed ``[lo, hi]`` (zero where lo > hi)."""
    c = np.searchsorted(sorted_x, hi, side="right") - np.searchsorted(sorted_x, lo, side="left")
    return np.where(np.asarray(lo) <= np.asarray(hi), c, 0)


def _overlap(a_lo, a_hi, b_lo, b_hi, lo, hi):
    """Length of ``[a_lo, a_hi] ∩ [b_lo, b_hi] ∩ [lo, hi]`` (zero for empty intervals)."""
    left = np.maximum(np.maximum(a_lo, b_lo), lo)
    right = np.minimum(np.minimum(a_hi, b_hi), hi)
    ok = (np.asarray(a_lo) <= a_hi) & (np.asarray(b_lo) <= b_hi)
    return np.where(ok, np.clip(right - left, 0.0, None), 0.0)


def epsilon_net_check(cls: ProgramClass, target: Program, dist, epsilon: float, points,
                      grid: float = DEFAULT_GRID) -> bool:
    """True iff every grid program farther than ``epsilon`` from ``target`` disagrees with it on some point."""
    lo, hi = _uniform_1d(dist)
    width = hi - lo
    x = np.sort(_as_points(points, 1)[:, 0])
    if isinstance(cls, IntervalClass):
        if not isinstance(target, IntervalProgram):
            raise ContractError("target must be an interval program")
        a = np.round(np.arange(0.0, 1.0 + grid / 2, grid), 12)
        t = target.a
        # disagreement region of [0, a] and [0, t] is (min, max]
        a_lo, a_hi = np.minimum(a, t), np.maximum(a, t)
        mass = _overlap(a_lo, a_hi, 0.0, np.inf, lo, hi) / width
        witnesses = np.searchsorted(x, a_hi, side="right") - np.searchsorted(x, a_lo, side="right")
        return not bool(np.any((mass > epsilon) & (witnesses == 0)))
    if isinstance(cls, BoxClass) and cls.dim == 1:
        if not isinstance(target, BoxProgram):
            raise ContractError("target must be a box program")
        g = np.round(np.arange(-1.0, 1.0 + grid / 2, grid), 12)
        L, U = np.meshgrid(g, g, indexing="ij")
        keep = L <= U
        L, U = L[keep], U[keep]
        tl, tu = float(target.lo[0]), float(target.hi[0])
        t_len = _overlap(tl, tu, -np.inf, np.inf, lo, hi) / width
        p_len = _overlap(L, U, -np.inf, np.inf, lo, hi) / width
        both = _overlap(L, U, tl, tu, lo, hi) / width
        mass = p_len + t_len - 2.0 * both
        n_p = _count_in(x, L, U)
        n_t = int(_count_in(x, tl, tu))
        n_both = _count_in(x, np.maximum(L, tl), np.minimum(U, tu))
        witnesses = n_p + n_t - 2 * n_both
        return not bool(np.any((mass > epsilon) & (witnesses == 0)))
    raise ContractError(f"epsilon-net checks are not supported for {cls!r}")
