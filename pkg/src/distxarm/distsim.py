"""Agent-based simulation: m players, one broadcast round per finished depth.

Each :class:`PlayerAgent` owns its oracle (and so its random stream) and a
private copy of the current confidence set. A level runs in two phases:

1. every agent samples its copy of ``S_h`` and posts one
   :class:`BroadcastMessage` to the bus (agents may run concurrently here);
2. :func:`barrier_broadcast` waits for all m messages, delivers every payload
   to every agent, and each agent aggregates and expands on its own.

Agents hold no shared mutable state between barriers, so the outcome does not
depend on scheduling or worker count.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor, wait
from dataclasses import dataclass, field

from .core import (
    MAX_DEPTH,
    AlgoParams,
    ConfidenceSet,
    LevelRecord,
    RunResult,
    aggregate_means,
    compute_T,
    finish,
    level_record,
    select_expansions,
)
from .objective import GroundTruth, OracleFactory, RewardOracle
from .partition import ROOT, NodeId, rep_point

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """Agents disagree on the next confidence set."""


class BarrierTimeout(RuntimeError):
    """An agent did not reach the barrier in time."""


@dataclass(frozen=True)
class BroadcastMessage:
    sender: int
    depth: int
    payload: tuple[tuple[NodeId, float], ...]


@dataclass
class CommAccounting:
    rounds: int = 0
    values_per_player: int = 0
    payload_sizes: list[int] = field(default_factory=list)
    values_on_bus: int = 0


@dataclass(frozen=True)
class CommSummary:
    q: int
    M: int
    max_payload: int


@dataclass(frozen=True)
class RoundTrace:
    depth: int
    T: int
    size: int
    pulls: tuple[int, ...]


class BroadcastBus:
    """In-process all-to-all channel with per-round accounting."""

    def __init__(self, m: int):
        self.m = m
        self.comm = CommAccounting()
        self._pending: dict[int, BroadcastMessage] = {}

    def post(self, msg: BroadcastMessage):
        if msg.sender in self._pending:
            raise RuntimeError(f"player {msg.sender} posted twice in one round")
        self._pending[msg.sender] = msg

    def missing(self) -> list[int]:
        return [j for j in range(1, self.m + 1) if j not in self._pending]

    def deliver(self, depth: int) -> list[BroadcastMessage]:
        """Close the round: return all messages ordered by sender."""
        msgs = [self._pending[j] for j in range(1, self.m + 1)]
        if any(msg.depth != depth for msg in msgs):
            raise DivergenceError(f"messages from mixed depths in round for depth {depth}")
        sizes = {len(msg.payload) for msg in msgs}
        if len(sizes) != 1:
            raise DivergenceError(f"payload sizes differ across players: {sorted(sizes)}")
        size = sizes.pop()
        self.comm.rounds += 1
        self.comm.values_per_player += size
        self.comm.payload_sizes.append(size)
        self.comm.values_on_bus += size * self.m
        self._pending.clear()
        return msgs


class PlayerAgent:
    def __init__(self, player_id: int, oracle: RewardOracle, params: AlgoParams):
        self.player_id = player_id
        self.oracle = oracle
        self.params = params
        self.cset = ConfidenceSet(0, [ROOT], compute_T(0, 1, params))
        self.evals = 0
        self.history: list[LevelRecord] = []
        self.last: ConfidenceSet | None = None

    def ready(self) -> bool:
        """Whether the current depth fits in the remaining budget."""
        if not self.cset.members or self.cset.depth > MAX_DEPTH:
            return False
        return self.evals + self.cset.T * len(self.cset.members) <= self.params.n

    def sample_level(self) -> BroadcastMessage:
        cset = self.cset
        payload = []
        for node in cset.members:
            mean = self.oracle.mean_reward(rep_point(node), cset.T)
            payload.append((node, mean))
        self.evals += cset.T * len(cset.members)
        return BroadcastMessage(self.player_id, cset.depth, tuple(payload))

    def receive(self, msgs: list[BroadcastMessage]):
        """Aggregate all players' payloads and advance to the next depth."""
        cset = self.cset
        cset.per_player_means = {(msg.sender, node): mean for msg in msgs for node, mean in msg.payload}
        cset.agg_means = aggregate_means(cset.per_player_means, self.params.m)
        expanded, next_members = select_expansions(cset, self.params)
        self.history.append(level_record(cset, len(expanded)))
        self.last = cset
        h = cset.depth + 1
        T = compute_T(h, len(next_members), self.params) if next_members else 0
        self.cset = ConfidenceSet(h, next_members, T)


def barrier_broadcast(agents: list[PlayerAgent], bus: BroadcastBus, depth: int,
                      shuffle: random.Random | None = None) -> dict[NodeId, float]:
    """Deliver every payload to every agent and let each one aggregate.

    ``shuffle`` permutes the delivery order to agents; the aggregate itself is
    formed in player-id order on every agent.
    """
    missing = bus.missing()
    if missing:
        raise BarrierTimeout(f"players {missing} never reached the barrier at depth {depth}")
    msgs = bus.deliver(depth)
    order = list(agents)
    if shuffle is not None:
        shuffle.shuffle(order)
    for agent in order:
        agent.receive(msgs)
    reference = agents[0]
    for agent in agents[1:]:
        if agent.cset.members != reference.cset.members:
            raise DivergenceError(
                f"player {agent.player_id} disagrees with player {reference.player_id} on S_{depth + 1}"
            )
    return dict(reference.last.agg_means)


def account(comm: CommAccounting) -> CommSummary:
    return CommSummary(comm.rounds, comm.values_per_player, max(comm.payload_sizes, default=0))


def run_distributed(params: AlgoParams, oracle_factory: OracleFactory, ground_truth: GroundTruth,
                    workers: int = 1, schedule_seed: int | None = None,
                    barrier_timeout: float = 60.0) -> RunResult:
    """Simulate the m players with an explicit broadcast bus.

    ``workers > 1`` samples agents on a thread pool. ``schedule_seed``
    permutes the agent stepping order every level. Neither changes the
    result.
    """
    agents = [PlayerAgent(j, oracle_factory(j), params) for j in range(1, params.m + 1)]
    bus = BroadcastBus(params.m)
    shuffle = random.Random(schedule_seed) if schedule_seed is not None else None
    trace: list[RoundTrace] = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while True:
            readiness = {agent.ready() for agent in agents}
            if len(readiness) != 1:
                raise DivergenceError("players disagree on whether the budget allows another depth")
            if not readiness.pop():
                break
            depth = agents[0].cset.depth
            order = list(agents)
            if shuffle is not None:
                shuffle.shuffle(order)
            if pool is None:
                for agent in order:
                    bus.post(agent.sample_level())
            else:
                futures = [pool.submit(agent.sample_level) for agent in order]
                done, not_done = wait(futures, timeout=barrier_timeout)
                if not_done:
                    raise BarrierTimeout(f"{len(not_done)} players still sampling depth {depth}")
                for fut in futures:
                    bus.post(fut.result())
            T = agents[0].cset.T
            size = len(agents[0].cset.members)
            barrier_broadcast(agents, bus, depth, shuffle)
            trace.append(RoundTrace(depth, T, size, tuple(a.evals for a in agents)))
            log.debug("depth %d: |S|=%d T=%d", depth, size, T)
    finally:
        if pool is not None:
            pool.shutdown()

    lead = agents[0]
    for agent in agents[1:]:
        if agent.history != lead.history:
            raise DivergenceError(f"player {agent.player_id} trajectory differs from player 1")
    result = finish(lead.history, ground_truth, lead.oracle.objective)
    result.comm = bus.comm
    result.trace = trace
    return result
