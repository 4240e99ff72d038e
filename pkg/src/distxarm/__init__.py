"""Distributed level-order search for continuum-armed bandits, with a
deterministic multi-player simulator."""

from .bounds import BoundParams
from .core import AlgoParams, RunResult, run_serial
from .distsim import run_distributed
from .objective import (
    DOUBLE_SINE,
    GARLAND,
    NoiseModel,
    RewardOracle,
    builtin_ground_truth,
    find_ground_truth,
    get_objective,
    oracle_factory,
)
from .partition import NodeId, SmoothnessParams

__all__ = [
    "AlgoParams",
    "BoundParams",
    "DOUBLE_SINE",
    "GARLAND",
    "NodeId",
    "NoiseModel",
    "RewardOracle",
    "RunResult",
    "SmoothnessParams",
    "builtin_ground_truth",
    "find_ground_truth",
    "get_objective",
    "oracle_factory",
    "run_distributed",
    "run_serial",
]
