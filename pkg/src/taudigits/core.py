"""Input distributions, reproducible sampling, programs and disagreement counts.

Randomness comes from numpy's counter-based ``Philox`` bit generator keyed by
``SeedSequence([seed, stream])``.  Every point consumes a fixed block of
uniform doubles (drawn row-major), and Gaussian coordinates are produced by
the inverse normal CDF, so a shorter run is always a prefix of a longer run
with the same seed and the sequence is identical on every platform.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtri

# Independent random streams derived from one user seed.
SEARCH_STREAM = 0
VERIFY_STREAM = 1
ERROR_STREAM = 2

DEFAULT_CONFIDENCE = 0.95


class ConfigError(ValueError):
    """Invalid configuration (distribution parameters, files, flags)."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


def make_generator(seed: int, stream: int = SEARCH_STREAM) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def _open_unit(u: np.ndarray) -> np.ndarray:
    # [0, 1) doubles -> midpoints strictly inside (0, 1); ndtri(0) would be -inf.
    return (np.floor(u * 2.0**53) + 0.5) / 2.0**53


# --------------------------------------------------------------------------
# distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ConfigError("uniform_box needs lo and hi of equal, nonzero length")
        if not all(math.isfinite(v) for v in self.lo + self.hi):
            raise ConfigError("uniform_box bounds must be finite")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise ConfigError(f"uniform_box has lo > hi: {self.lo} vs {self.hi}")

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def n_uniforms(self) -> int:
        return self.dimension

    def transform(self, u: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        return lo + u * (np.asarray(self.hi) - lo)

    def to_dict(self) -> dict:
        return {"kind": "uniform_box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: tuple[float, ...]
    variance: tuple[float, ...]


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of axis-aligned Gaussians.  Variances, not standard deviations."""

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(
            GaussianComponent(float(c[0]), tuple(map(float, c[1])), tuple(map(float, c[2])))
            if isinstance(c, (tuple, list)) else c
            for c in self.components
        )
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigError("gaussian_mixture needs at least one component")
        dim = len(comps[0].mean)
        if dim == 0:
            raise ConfigError("gaussian_mixture components need a nonempty mean")
        for c in comps:
            if len(c.mean) != dim or len(c.variance) != dim:
                raise ConfigError("gaussian_mixture components disagree on dimension")
            if c.weight < 0:
                raise ConfigError("mixture weights must be nonnegative")
            if any(v < 0 or not math.isfinite(v) for v in c.variance):
                raise ConfigError(f"negative or non-finite variance: {c.variance}")
            if not all(math.isfinite(m) for m in c.mean):
                raise ConfigError("mixture means must be finite")
        if abs(sum(c.weight for c in comps) - 1.0) > 1e-9:
            raise ConfigError("mixture weights must sum to 1 (within 1e-9)")

    @property
    def dimension(self) -> int:
        return len(self.components[0].mean)

    @property
    def n_uniforms(self) -> int:
        return 1 + self.dimension

    def transform(self, u: np.ndarray) -> np.ndarray:
        weights = np.array([c.weight for c in self.components])
        cum = np.cumsum(weights)
        idx = np.minimum(np.searchsorted(cum, u[:, 0], side="right"), len(weights) - 1)
        means = np.array([c.mean for c in self.components])[idx]
        std = np.sqrt(np.array([c.variance for c in self.components]))[idx]
        return means + std * ndtri(_open_unit(u[:, 1:]))

    def to_dict(self) -> dict:
        return {
            "kind": "gaussian_mixture",
            "components": [
                {"weight": c.weight, "mean": list(c.mean), "variance": list(c.variance)}
                for c in self.components
            ],
        }


@dataclass(frozen=True)
class Product:
    """Independent concatenation of distributions (coordinates in order)."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ConfigError("product needs at least one part")

    @property
    def dimension(self) -> int:
        return sum(p.dimension for p in self.parts)

    @property
    def n_uniforms(self) -> int:
        return sum(p.n_uniforms for p in self.parts)

    def transform(self, u: np.ndarray) -> np.ndarray:
        cols, k = [], 0
        for p in self.parts:
            cols.append(p.transform(u[:, k : k + p.n_uniforms]))
            k += p.n_uniforms
        return np.concatenate(cols, axis=1)

    def to_dict(self) -> dict:
        return {"kind": "product", "parts": [p.to_dict() for p in self.parts]}


InputDistribution = UniformBox | GaussianMixture | Product


def distribution_from_dict(obj: dict) -> InputDistribution:
    """Build a distribution from its JSON form (see ``schemas/distribution.schema.json``)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("distribution must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "uniform_box":
            return UniformBox(tuple(obj["lo"]), tuple(obj["hi"]))
        if kind == "gaussian_mixture":
            comps = tuple(
                GaussianComponent(float(c["weight"]), tuple(map(float, c["mean"])),
                                  tuple(map(float, c["variance"])))
                for c in obj["components"]
            )
            return GaussianMixture(comps)
        if kind == "product":
            return Product(tuple(distribution_from_dict(p) for p in obj["parts"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed {kind} distribution: {exc}") from None
    raise ConfigError(f"unsupported distribution kind {kind!r}")


def load_distribution(source: str | Path | dict) -> InputDistribution:
    """Accept a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, dict):
        return distribution_from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        return distribution_from_dict(json.loads(text))
    path = Path(text)
    if not path.exists():
        raise ConfigError(f"distribution file not found: {path}")
    return distribution_from_dict(json.loads(path.read_text()))


def uniform(lo: Sequence[float], hi: Sequence[float]) -> UniformBox:
    return UniformBox(tuple(lo), tuple(hi))


def thermostat_pre() -> Product:
    """Initial temperature mixture and target temperature used by the thermostat benchmark."""
    third = 1.0 / 3.0
    lin = GaussianMixture((
        GaussianComponent(third, (30.0,), (9.0,)),
        GaussianComponent(third, (35.0,), (9.0,)),
        GaussianComponent(1.0 - 2 * third, (50.0,), (9.0,)),
    ))
    ltarget = GaussianMixture((GaussianComponent(1.0, (75.0,), (1.0,)),))
    return Product((lin, ltarget))


# --------------------------------------------------------------------------
# samples
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSequence:
    """Immutable ordered sample points; ``points[i]`` is sample number ``i + 1``."""

    points: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.points)

    def prefix(self, n: int) -> "SampleSequence":
        return SampleSequence(self.points[:n], self.seed)

    def digest(self) -> str:
        return sample_digest(self.points)


def sample_digest(points: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(points, dtype=np.float64).tobytes()).hexdigest()[:16]


def sample(dist: InputDistribution, seed: int, n: int, stream: int = SEARCH_STREAM) -> SampleSequence:
    if n < 0:
        raise ContractError("sample count must be nonnegative")
    gen = make_generator(seed, stream)
    u = gen.random((n, dist.n_uniforms))
    pts = dist.transform(u) if n else np.empty((0, dist.dimension))
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    pts.flags.writeable = False
    return SampleSequence(pts, int(seed))


class SampleStream:
    """Incrementally drawn sample sequence; consistent with :func:`sample` prefixes."""

    def __init__(self, dist: InputDistribution, seed: int, stream: int = SEARCH_STREAM, chunk: int = 256):
        self.dist = dist
        self.seed = int(seed)
        self._gen = make_generator(seed, stream)
        self._chunk = chunk
        self._buf = np.empty((0, dist.dimension))
        self._n = 0

    def __len__(self) -> int:
        return self._n

    def draw(self) -> np.ndarray:
        if self._n == len(self._buf):
            u = self._gen.random((self._chunk, self.dist.n_uniforms))
            self._buf = np.concatenate([self._buf, self.dist.transform(u)])
        x = self._buf[self._n]
        self._n += 1
        return x

    @property
    def points(self) -> np.ndarray:
        view = self._buf[: self._n]
        view.flags.writeable = False
        return view

    def snapshot(self) -> SampleSequence:
        return SampleSequence(self.points.copy(), self.seed)


# --------------------------------------------------------------------------
# programs
# --------------------------------------------------------------------------


def check_points(X, dim: int | None = None) -> np.ndarray:
    """Coerce ``X`` to a finite 2-D float array, optionally checking its width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if dim == 1 else X.reshape(1, -1)
    if X.ndim != 2:
        raise ContractError(f"expected a 2-D array of points, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ContractError(f"input dimension {X.shape[1]} does not match program dimension {dim}")
    return X


class Program:
    """A total {0,1}-valued function on real vectors.

    Subclasses implement ``_predict`` on a validated ``(n, dim)`` array.
    """

    class_id: str = "program"
    dim: int

    @property
    def params(self) -> tuple:
        raise NotImplementedError

    def key(self) -> tuple:
        return (self.class_id, self.params)

    def predict(self, X) -> np.ndarray:
        return self._predict(check_points(X, self.dim)).astype(np.int8)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> int:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape[0] != self.dim:
            raise ContractError(f"input dimension {x.shape[0]} does not match program dimension {self.dim}")
        return int(self._predict(x.reshape(1, -1))[0])

    def events(self, X: np.ndarray) -> dict[str, np.ndarray]:
        """Extra named values visible to postconditions, such as sketch assert events."""
        return {}

    def to_dict(self) -> dict:
        return {"class": self.class_id, "params": list(self.params)}

    def __eq__(self, other):
        return isinstance(other, Program) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


class IntervalProgram(Program):
    """``x in [0, a]`` on the real line."""

    class_id = "interval"
    dim = 1

    def __init__(self, a: float):
        self.a = float(a)

    @property
    def params(self) -> tuple:
        return (self.a,)

    def _predict(self, X):
        x = X[:, 0]
        return (x >= 0.0) & (x <= self.a)

    def __repr__(self):
        return f"IntervalProgram([0, {self.a:g}])"


class BoxProgram(Program):
    """Axis-aligned closed box; ``lo > hi`` in any coordinate denotes the empty box."""

    class_id = "box"

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=np.float64).reshape(-1)
        self.hi = np.asarray(hi, dtype=np.float64).reshape(-1)
        if self.lo.shape != self.hi.shape:
            raise ContractError("box bounds must have equal length")
        self.dim = len(self.lo)

    @classmethod
    def empty(cls, dim: int) -> "BoxProgram":
        return cls(np.ones(dim), -np.ones(dim))

    @property
    def is_empty(self) -> bool:
        return bool(np.any(self.lo > self.hi))

    @property
    def params(self) -> tuple:
        return tuple(self.lo.tolist()) + tuple(self.hi.tolist())

    def _predict(self, X):
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)

    def __repr__(self):
        if self.is_empty:
            return f"BoxProgram(empty, dim={self.dim})"
        sides = " x ".join(f"[{l:g}, {h:g}]" for l, h in zip(self.lo, self.hi))
        return f"BoxProgram({sides})"


class ConstantProgram(Program):
    class_id = "constant"

    def __init__(self, value: int, dim: int):
        if value not in (0, 1):
            raise ContractError("constant program must output 0 or 1")
        self.value = int(value)
        self.dim = int(dim)

    @property
    def params(self) -> tuple:
        return (self.value, self.dim)

    def _predict(self, X):
        return np.full(len(X), bool(self.value))

    def __repr__(self):
        return f"ConstantProgram({self.value})"


# --------------------------------------------------------------------------
# disagreement
# --------------------------------------------------------------------------


def _labels(obj, points: np.ndarray) -> np.ndarray:
    if isinstance(obj, Program):
        return obj.predict(points).astype(np.int8) if len(points) else np.zeros(0, np.int8)
    if isinstance(obj, str):
        bits = np.frombuffer(obj.encode("ascii"), dtype=np.uint8) - ord("0")
    elif isinstance(obj, (bytes, bytearray)):
        bits = np.frombuffer(bytes(obj), dtype=np.uint8)
    else:
        bits = np.asarray(obj).astype(np.int64).reshape(-1)
    if np.any((bits != 0) & (bits != 1)):
        raise ContractError("label strings may only contain 0 and 1")
    if len(bits) < len(points):
        raise ContractError(f"label string of length {len(bits)} is shorter than the {len(points)}-point prefix")
    return bits[: len(points)].astype(np.int8)


def hamming(samples, a, b) -> int:
    """Number of sample points on which ``a`` and ``b`` disagree.

    ``a`` and ``b`` are programs or 0/1 strings (read positionally).
    ``samples`` is a :class:`SampleSequence`, an array of points, or an int
    prefix length when both arguments are strings.
    """
    if isinstance(samples, SampleSequence):
        points = samples.points
    elif isinstance(samples, (int, np.integer)):
        points = np.zeros((int(samples), 0))
    else:
        points = np.asarray(samples, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
    return int(np.count_nonzero(_labels(a, points) != _labels(b, points)))


def hoeffding_half_width(n: int, confidence: float = DEFAULT_CONFIDENCE) -> float:
    """Two-sided Hoeffding half-width for a mean of ``n`` values in [0, 1]."""
    if n < 1:
        raise ContractError("need at least one sample")
    if not 0.0 < confidence < 1.0:
        raise ContractError("confidence must lie in (0, 1)")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    n: int

    @property
    def interval(self) -> tuple[float, float]:
        return (max(0.0, self.value - self.half_width), min(1.0, self.value + self.half_width))


def empirical_error(p: Program, spec: Program, dist: InputDistribution, n: int, seed: int,
                    confidence: float = DEFAULT_CONFIDENCE, stream: int = ERROR_STREAM) -> Estimate:
    """Fraction of ``n`` fresh samples on which ``p`` and ``spec`` disagree."""
    if n < 1:
        raise ContractError("empirical_error needs n >= 1")
    S = sample(dist, seed, n, stream=stream)
    return Estimate(hamming(S, p, spec) / n, hoeffding_half_width(n, confidence), n)


@dataclass(frozen=True)
class Unknown:
    """Synthesis outcome that is neither a program nor a proof of unrealizability."""

    reason: str = "timeout"

    def __bool__(self):
        return False


def sigma_str(sigma: bytes) -> str:
    return bytes(b + 48 for b in sigma).decode("ascii")
