"""Test objectives, bounded noise and the reward oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np


class ObjectiveId(str, Enum):
    DOUBLE_SINE = "double_sine"
    GARLAND = "garland"
    CUSTOM = "custom"


@dataclass(frozen=True)
class ObjectiveFn:
    """A function on [0, 1] with values in [0, 1].

    ``func`` must accept numpy arrays.
    """

    id: ObjectiveId
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or self.id.value

    def __call__(self, x):
        return self.func(x)


def _double_sine(x):
    return 0.5 * (np.sin(13 * x) * np.sin(27 * x) / 2 + 1)


def _garland(x):
    return x * (1 - x) * (4 - np.sqrt(np.abs(np.sin(60 * x))))


DOUBLE_SINE = ObjectiveFn(ObjectiveId.DOUBLE_SINE, _double_sine)
GARLAND = ObjectiveFn(ObjectiveId.GARLAND, _garland)

BUILTIN = {fn.id.value: fn for fn in (DOUBLE_SINE, GARLAND)}


def constant(value: float) -> ObjectiveFn:
    if not 0.0 <= value <= 1.0:
        raise ValueError("constant objective must lie in [0, 1]")
    return ObjectiveFn(
        ObjectiveId.CUSTOM,
        lambda x: np.full_like(np.asarray(x, dtype=float), value),
        name=f"constant_{value:g}",
    )


def get_objective(name: str) -> ObjectiveFn:
    try:
        return BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(BUILTIN)}") from None


def _check_domain(x: float):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x!r} outside the arm space [0, 1]")


def evaluate(fn: ObjectiveFn, x: float) -> float:
    _check_domain(x)
    return float(fn(np.float64(x)))


class NoiseKind(str, Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise, kept inside [0, 1].

    ``truncation="clamp"`` clips ``f(x) + noise`` to [0, 1]. This biases the
    mean toward the interior when ``f(x)`` is within a few sigma of a
    boundary. ``truncation="reject"`` redraws until the reward lands in
    [0, 1] instead.
    """

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = 0.0
    halfwidth: float = 0.0
    truncation: str = "clamp"

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.sigma < 0 or self.halfwidth < 0:
            raise ValueError("noise scale must be nonnegative")
        if self.truncation not in ("clamp", "reject"):
            raise ValueError(f"unknown truncation mode {self.truncation!r}")

    @classmethod
    def gaussian(cls, sigma: float, truncation: str = "clamp") -> "NoiseModel":
        return cls(NoiseKind.GAUSSIAN, sigma=sigma, truncation=truncation)

    @classmethod
    def uniform(cls, halfwidth: float, truncation: str = "clamp") -> "NoiseModel":
        return cls(NoiseKind.UNIFORM, halfwidth=halfwidth, truncation=truncation)

    @property
    def is_noiseless(self) -> bool:
        return (
            self.kind is NoiseKind.NONE
            or (self.kind is NoiseKind.GAUSSIAN and self.sigma == 0)
            or (self.kind is NoiseKind.UNIFORM and self.halfwidth == 0)
        )

    def _draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind is NoiseKind.GAUSSIAN:
            return rng.normal(0.0, self.sigma, size)
        return rng.uniform(-self.halfwidth, self.halfwidth, size)

    def perturb(self, value: float, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.is_noiseless:
            return np.full(size, value)
        if self.truncation == "clamp":
            return np.clip(value + self._draw(rng, size), 0.0, 1.0)
        out = value + self._draw(rng, size)
        bad = (out < 0.0) | (out > 1.0)
        while bad.any():
            out[bad] = value + self._draw(rng, int(bad.sum()))
            bad = (out < 0.0) | (out > 1.0)
        return out


def player_stream(master_seed: int, player_id: int) -> np.random.Generator:
    """Independent random stream for one player, split off ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(player_id,)))


class RewardOracle:
    """Noisy evaluations of one objective, drawn from an owned random stream.

    ``evaluations`` counts every reward handed out.
    """

    def __init__(self, objective: ObjectiveFn, noise: NoiseModel | None = None,
                 rng: np.random.Generator | int | None = None):
        self.objective = objective
        self.noise = noise or NoiseModel()
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.evaluations = 0

    def sample(self, x: float, count: int) -> np.ndarray:
        _check_domain(x)
        if count < 0:
            raise ValueError("count must be nonnegative")
        value = float(self.objective(np.float64(x)))
        self.evaluations += count
        return self.noise.perturb(value, count, self.rng)

    def pull(self, x: float) -> float:
        return float(self.sample(x, 1)[0])

    def mean_reward(self, x: float, count: int) -> float:
        """Empirical mean of ``count`` fresh pulls at ``x``."""
        if count < 1:
            raise ValueError("count must be positive")
        return math.fsum(self.sample(x, count)) / count


OracleFactory = Callable[[int], RewardOracle]


def oracle_factory(objective: ObjectiveFn, noise: NoiseModel, master_seed: int) -> OracleFactory:
    """Factory giving player ``j`` (1-based) its own oracle and stream."""

    def make(player_id: int) -> RewardOracle:
        return RewardOracle(objective, noise, player_stream(master_seed, player_id))

    return make


def pull(oracle: RewardOracle, x: float) -> float:
    return oracle.pull(x)


@dataclass(frozen=True)
class GroundTruth:
    f_star: float
    x_star: float
    grid_resolution: int


def _ternary_max(func, lo: float, hi: float, iters: int = 200) -> float:
    for _ in range(iters):
        if hi - lo <= 1e-16:
            break
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if func(a) < func(b):
            lo = a
        else:
            hi = b
    return (lo + hi) / 2


def find_ground_truth(fn: ObjectiveFn, resolution: int = 10**7, chunk: int = 2**20) -> GroundTruth:
    """Brute-force maximizer: dense grid, then ternary search around the best point."""
    if resolution < 1000:
        raise ValueError("resolution must be at least 1000")
    best_val, best_k = -math.inf, 0
    for start in range(0, resolution, chunk):
        k = np.arange(start, min(start + chunk, resolution))
        vals = np.asarray(fn(k / (resolution - 1)), dtype=float)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_k = float(vals[j]), int(k[j])
    step = 1.0 / (resolution - 1)
    lo = max(0.0, (best_k - 1) * step)
    hi = min(1.0, (best_k + 1) * step)

    def f(x):
        return float(fn(np.float64(x)))

    x_ref = _ternary_max(f, lo, hi)
    x_grid = best_k * step
    if f(x_ref) >= best_val:
        return GroundTruth(f(x_ref), x_ref, resolution)
    return GroundTruth(best_val, x_grid, resolution)


@lru_cache(maxsize=None)
def builtin_ground_truth(name: str, resolution: int = 10**7) -> GroundTruth:
    return find_ground_truth(get_objective(name), resolution)
