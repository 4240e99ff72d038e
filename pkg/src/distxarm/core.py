"""Level-order search over the covering tree, all players emulated in one process.

Each depth ``h`` is processed in one pass: every player pulls every member of
the confidence set ``S_h`` exactly ``T_h`` times, the per-player means are
averaged, and members close enough to the best average are expanded into
``S_{h+1}``. A depth is only started if all of its pulls fit in the remaining
per-player budget, so every finished depth has complete estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .objective import GroundTruth, OracleFactory, RewardOracle
from .partition import ROOT, NodeId, SmoothnessParams, children, rep_point

# float precision runs out around depth 52 for dyadic midpoints
MAX_DEPTH = 50


@dataclass(frozen=True)
class AlgoParams:
    m: int
    n: int
    delta: float = 0.05
    smoothness: SmoothnessParams = field(default_factory=SmoothnessParams)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class ConfidenceSet:
    depth: int
    members: list[NodeId]
    T: int
    per_player_means: dict[tuple[int, NodeId], float] = field(default_factory=dict)
    agg_means: dict[NodeId, float] = field(default_factory=dict)


@dataclass(frozen=True)
class LevelRecord:
    depth: int
    size: int
    T: int
    best_mean: float
    expanded: int
    members: tuple[int, ...]
    means: tuple[float, ...]

    def node_ids(self) -> list[NodeId]:
        return [NodeId(self.depth, i) for i in self.members]


@dataclass
class RunResult:
    x_n: float
    loss: float
    h_max: int
    rounds: int
    messages: int
    evals_per_player: int
    trajectory: list[LevelRecord]
    # bookkeeping that is not part of the algorithm's output
    comm: object = field(default=None, compare=False, repr=False)
    trace: list = field(default_factory=list, compare=False, repr=False)

    @property
    def budget_too_small(self) -> bool:
        return self.h_max < 0


def _log_term(h: int, set_size: int, delta: float) -> float:
    return math.log(math.pi**2 * (h + 1) ** 2 * set_size / (3 * delta))


def compute_T(h: int, set_size: int, params: AlgoParams) -> int:
    """Per-player pulls of each node at depth ``h``.

    The same ceiled formula is used at ``h = 0``.
    """
    if h < 0 or set_size < 1:
        raise ValueError("need h >= 0 and set_size >= 1")
    scale = params.smoothness.diameter(h)
    return max(1, math.ceil(_log_term(h, set_size, params.delta) / (2 * scale**2 * params.m)))


def confidence_radius(h: int, set_size: int, T: int, m: int, delta: float) -> float:
    if T < 1:
        raise ValueError("T must be positive")
    return math.sqrt(_log_term(h, set_size, delta) / (2 * m * T))


class MissingEstimateError(KeyError):
    pass


def aggregate_means(per_player: Mapping[tuple[int, NodeId], float], m: int) -> dict[NodeId, float]:
    """Average the players' means for every node.

    ``math.fsum`` is correctly rounded, so the result does not depend on the
    order in which player contributions arrive.
    """
    nodes = sorted({node for _, node in per_player})
    out = {}
    for node in nodes:
        vals = []
        for j in range(1, m + 1):
            try:
                vals.append(per_player[(j, node)])
            except KeyError:
                raise MissingEstimateError(f"no estimate from player {j} for node {node}") from None
        out[node] = math.fsum(vals) / m
    extra = {j for j, _ in per_player} - set(range(1, m + 1))
    if extra:
        raise MissingEstimateError(f"estimates from unknown players {sorted(extra)}")
    return out


def best_member(cset: ConfidenceSet) -> NodeId:
    """Member with the largest aggregated mean; the lowest index wins ties."""
    return max(cset.members, key=lambda node: (cset.agg_means[node], -node.index))


def select_expansions(cset: ConfidenceSet, params: AlgoParams) -> tuple[list[NodeId], list[NodeId]]:
    """Expanded members of ``cset`` and the members of the next confidence set."""
    best = cset.agg_means[best_member(cset)]
    threshold = best - 3 * params.smoothness.diameter(cset.depth)
    expanded = [node for node in cset.members if cset.agg_means[node] >= threshold]
    next_members = [child for node in expanded for child in children(node)]
    return expanded, next_members


def level_record(cset: ConfidenceSet, n_expanded: int) -> LevelRecord:
    return LevelRecord(
        depth=cset.depth,
        size=len(cset.members),
        T=cset.T,
        best_mean=cset.agg_means[best_member(cset)],
        expanded=n_expanded,
        members=tuple(node.index for node in cset.members),
        means=tuple(cset.agg_means[node] for node in cset.members),
    )


def _best_index(rec: LevelRecord) -> int:
    best = max(range(rec.size), key=lambda k: (rec.means[k], -rec.members[k]))
    return rec.members[best]


def finish(trajectory: list[LevelRecord], ground_truth: GroundTruth, objective) -> RunResult:
    """Assemble the output point, loss and communication totals."""
    if not trajectory:
        x_n = rep_point(ROOT)
        h_max = -1
    else:
        last = trajectory[-1]
        x_n = rep_point(NodeId(last.depth, _best_index(last)))
        h_max = last.depth
    loss = ground_truth.f_star - float(objective(x_n))
    return RunResult(
        x_n=x_n,
        loss=loss,
        h_max=h_max,
        rounds=len(trajectory),
        messages=sum(rec.size for rec in trajectory),
        evals_per_player=sum(rec.size * rec.T for rec in trajectory),
        trajectory=list(trajectory),
    )


def at_budget(result: RunResult, n: int, ground_truth: GroundTruth, objective) -> RunResult:
    """The result a run with the smaller per-player budget ``n`` would have produced.

    The search never looks at ``n`` except to stop, so the smaller run's
    trajectory is the longest prefix whose cumulative pulls fit in ``n``.
    """
    prefix = []
    used = 0
    for rec in result.trajectory:
        used += rec.size * rec.T
        if used > n:
            break
        prefix.append(rec)
    return finish(prefix, ground_truth, objective)


def _as_oracles(oracle: RewardOracle | OracleFactory | Sequence[RewardOracle], m: int) -> list[RewardOracle]:
    if isinstance(oracle, RewardOracle):
        if m != 1:
            raise ValueError("a single oracle can only serve m=1; pass a per-player factory")
        return [oracle]
    if callable(oracle):
        return [oracle(j) for j in range(1, m + 1)]
    oracles = list(oracle)
    if len(oracles) != m:
        raise ValueError(f"expected {m} oracles, got {len(oracles)}")
    return oracles


def run_serial(params: AlgoParams, oracle: RewardOracle | OracleFactory | Sequence[RewardOracle],
               ground_truth: GroundTruth) -> RunResult:
    """Run the whole search with ``params.m`` players emulated in lock-step.

    ``oracle`` is either a per-player factory (called with ``j = 1..m``), a
    list of ``m`` oracles, or a single oracle when ``m == 1``.
    """
    oracles = _as_oracles(oracle, params.m)
    members = [ROOT]
    h = 0
    evals = 0
    trajectory: list[LevelRecord] = []
    while members and h <= MAX_DEPTH:
        T = compute_T(h, len(members), params)
        if evals + T * len(members) > params.n:
            break
        cset = ConfidenceSet(h, members, T)
        for j, orc in enumerate(oracles, start=1):
            for node in members:
                cset.per_player_means[(j, node)] = orc.mean_reward(rep_point(node), T)
        cset.agg_means = aggregate_means(cset.per_player_means, params.m)
        expanded, members = select_expansions(cset, params)
        trajectory.append(level_record(cset, len(expanded)))
        evals += T * len(cset.members)
        h += 1
    return finish(trajectory, ground_truth, oracles[0].objective)
