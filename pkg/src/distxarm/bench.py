"""Loss-versus-budget sweeps, bound verification and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import (
    BoundParams,
    hmax_lower_bound,
    loss_upper_bound,
    messages_upper_bound,
    rounds_upper_bound,
)
from .core import AlgoParams, RunResult, at_budget, run_serial
from .distsim import run_distributed
from .objective import NoiseKind, NoiseModel, builtin_ground_truth, get_objective, oracle_factory
from .partition import SmoothnessParams

log = logging.getLogger(__name__)

CSV_HEADER = ["objective", "m", "n", "seed", "loss", "h_max", "q", "M", "pulls", "wall_ms"]

# depths over which the set-size constant is calibrated
CALIBRATION_DEPTH = 4


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    objective: str = "double_sine"
    noise: str = "gaussian"
    sigma: float = 0.1
    truncation: str = "clamp"
    players: list[int] = field(default_factory=lambda: [1, 4, 16])
    budgets: list[int] = field(default_factory=lambda: [400, 800, 1600])
    delta: float = 0.05
    nu1: float = 1.0
    rho: float = 0.5
    nu2: float = 0.5
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    d: float = 0.0
    C: float | None = None
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        get_objective(self.objective)
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if not self.players or any(m < 1 for m in self.players):
            raise ConfigError("players must be a nonempty list of positive integers")
        if not self.budgets or any(n < 1 for n in self.budgets):
            raise ConfigError("budgets must be a nonempty list of positive integers")
        if list(self.budgets) != sorted(self.budgets):
            raise ConfigError("budgets must be sorted ascending")
        NoiseKind(self.noise)

    @property
    def smoothness(self) -> SmoothnessParams:
        return SmoothnessParams(self.nu1, self.rho, self.nu2)

    @property
    def noise_model(self) -> NoiseModel:
        kind = NoiseKind(self.noise)
        if kind is NoiseKind.GAUSSIAN:
            return NoiseModel.gaussian(self.sigma, self.truncation)
        if kind is NoiseKind.UNIFORM:
            return NoiseModel.uniform(self.sigma, self.truncation)
        return NoiseModel()

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("seeds"), int):
            data["seeds"] = list(range(data["seeds"]))
        return cls(**data)


@dataclass
class SweepRecord:
    objective: str
    m: int
    n: int
    seed: int
    loss: float
    h_max: int
    q: int
    M: int
    pulls: int
    wall_ms: float
    error: str | None = None

    @classmethod
    def from_result(cls, objective: str, m: int, n: int, seed: int, res: RunResult, wall_ms: float):
        return cls(objective, m, n, seed, res.loss, res.h_max, res.rounds, res.messages,
                   res.evals_per_player * m, wall_ms)


def _run_cell(config: ExperimentConfig, m: int, seed: int) -> list[SweepRecord]:
    objective = get_objective(config.objective)
    gt = builtin_ground_truth(config.objective)
    params = AlgoParams(m, config.budgets[-1], config.delta, config.smoothness)
    factory = oracle_factory(objective, config.noise_model, seed)
    t0 = time.perf_counter()
    try:
        full = run_distributed(params, factory, gt)
    except Exception as exc:  # one bad cell must not sink the sweep
        log.exception("cell objective=%s m=%d seed=%d failed", config.objective, m, seed)
        return [SweepRecord(config.objective, m, n, seed, math.nan, -1, 0, 0, 0, 0.0, error=repr(exc))
                for n in config.budgets]
    wall_ms = (time.perf_counter() - t0) * 1e3
    return [
        SweepRecord.from_result(config.objective, m, n, seed, at_budget(full, n, gt, objective), wall_ms)
        for n in config.budgets
    ]


def run_sweep(config: ExperimentConfig) -> list[SweepRecord]:
    """One run per (m, seed) at the largest budget; smaller budgets are read off
    the same trajectory. Records come back in (m, n, seed) order."""
    config.validate()
    cells = [(m, seed) for m in config.players for seed in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            per_cell = list(pool.map(_run_cell, [config] * len(cells), *zip(*cells)))
    else:
        per_cell = [_run_cell(config, m, seed) for m, seed in cells]
    by_key = {(r.m, r.n, r.seed): r for recs in per_cell for r in recs}
    return [by_key[(m, n, s)] for m in config.players for n in config.budgets for s in config.seeds]


def calibrate_C(objective: str, smoothness: SmoothnessParams | None = None, delta: float = 0.05,
                depth: int = CALIBRATION_DEPTH) -> int:
    """Smallest integer C with ``|S_h| <= 2C`` for ``1 <= h <= depth`` in a
    noise-free run (the d = 0 form of the set-size cap)."""
    smoothness = smoothness or SmoothnessParams()
    gt = builtin_ground_truth(objective)
    factory = oracle_factory(get_objective(objective), NoiseModel(), 0)
    n = 1000
    while True:
        res = run_serial(AlgoParams(1, n, delta, smoothness), factory, gt)
        if res.h_max >= depth:
            break
        n *= 4
    sizes = [rec.size for rec in res.trajectory if 1 <= rec.depth <= depth]
    return max(1, math.ceil(max(sizes) / 2))


@dataclass
class BoundCheck:
    record: SweepRecord
    loss_bound: float
    rounds_bound: float
    messages_bound: float
    hmax_bound: float

    @property
    def loss_ok(self) -> bool:
        return self.record.loss <= self.loss_bound

    @property
    def rounds_ok(self) -> bool:
        return self.record.q <= self.rounds_bound

    @property
    def messages_ok(self) -> bool:
        return self.record.M <= self.messages_bound

    @property
    def hmax_ok(self) -> bool:
        return self.record.h_max >= math.floor(self.hmax_bound)


@dataclass
class BoundReport:
    checks: list[BoundCheck]
    delta: float

    def fraction(self, name: str) -> float:
        if not self.checks:
            return math.nan
        return sum(getattr(c, f"{name}_ok") for c in self.checks) / len(self.checks)

    @property
    def deterministic_ok(self) -> bool:
        return all(c.rounds_ok for c in self.checks)

    @property
    def probabilistic_ok(self) -> bool:
        if not self.checks:
            return True
        return all(self.fraction(name) >= 1 - self.delta for name in ("loss", "messages", "hmax"))

    def summary(self) -> dict[str, float]:
        return {name: self.fraction(name) for name in ("loss", "rounds", "messages", "hmax")}


def verify_bounds(records: list[SweepRecord], p: BoundParams) -> BoundReport:
    """Check every record against the loss, round, message and depth bounds.

    ``p`` supplies d, C, delta and the smoothness constants; m and n are taken
    from each record.
    """
    checks = []
    for rec in records:
        if rec.error is not None or rec.h_max < 0:
            continue
        rp = dataclasses.replace(p, m=rec.m, n=rec.n)
        checks.append(BoundCheck(
            record=rec,
            loss_bound=loss_upper_bound(rp),
            rounds_bound=rounds_upper_bound(rp),
            messages_bound=messages_upper_bound(rp, rec.h_max),
            hmax_bound=hmax_lower_bound(rp),
        ))
    return BoundReport(checks, p.delta)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(records: list[SweepRecord], path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for rec in records:
                row = [getattr(rec, col) for col in CSV_HEADER]
                row[-1] = f"{rec.wall_ms:.3f}"
                writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc
    return path


def summarize(records: list[SweepRecord]) -> list[dict]:
    """Mean loss and standard error per (m, n) cell."""
    cells: dict[tuple[int, int], list[float]] = {}
    for rec in records:
        if rec.error is None:
            cells.setdefault((rec.m, rec.n), []).append(rec.loss)
    rows = []
    for (m, n), losses in cells.items():
        arr = np.asarray(losses)
        se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
        rows.append({"m": m, "n": n, "runs": len(arr), "mean_loss": float(arr.mean()),
                     "median_loss": float(np.median(arr)), "se": se})
    return rows
