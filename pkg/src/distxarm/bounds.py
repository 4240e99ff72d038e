"""Closed-form guarantees for the level-order search, with their exact constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .partition import SmoothnessParams

# arity of the covering tree
K = 2


@dataclass(frozen=True)
class BoundParams:
    m: int
    n: int
    delta: float = 0.05
    d: float = 0.0
    C: float = 1.0
    nu1: float = 1.0
    rho: float = 0.5

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be nonnegative")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")

    @classmethod
    def from_run(cls, m: int, n: int, delta: float, smoothness: SmoothnessParams,
                 d: float = 0.0, C: float = 1.0) -> "BoundParams":
        return cls(m, n, delta, d, C, smoothness.nu1, smoothness.rho)


def c1_constant(p: BoundParams) -> float:
    e = 1.0 / (p.d + 2)
    return (p.C * 6.0 ** (-p.d) / (1 - p.rho ** (p.d + 2))) ** e / (p.rho * p.nu1)


def _rate(p: BoundParams) -> float:
    """``[log(pi^2 n^3 / 3 delta) / (m n)]^(1/(d+2))``"""
    log_term = math.log(math.pi**2 * float(p.n) ** 3 / (3 * p.delta))
    return (log_term / (p.m * p.n)) ** (1.0 / (p.d + 2))


def hmax_lower_bound(p: BoundParams) -> float:
    return math.log(c1_constant(p) * _rate(p)) / math.log(p.rho)


def loss_upper_bound(p: BoundParams) -> float:
    return 6 * p.nu1 * c1_constant(p) * _rate(p)


def rounds_upper_bound(p: BoundParams) -> float:
    arg = p.nu1**2 * p.m * p.n
    if arg <= 1:
        raise ValueError(f"need nu1^2 * m * n > 1, got {arg}")
    return math.log(arg) / (2 * math.log(1 / p.rho))


def set_size_upper_bound(p: BoundParams, h: int) -> float:
    """Cap on ``|S_h|`` for ``h >= 1``: ``2 C (6 nu1 rho^(h-1))^(-d)``."""
    if h < 1:
        raise ValueError("the cap applies to h >= 1")
    return 2 * p.C * (6 * p.nu1 * p.rho ** (h - 1)) ** (-p.d)


def messages_upper_bound(p: BoundParams, h_max: int) -> float:
    if h_max < 0:
        raise ValueError("h_max must be nonnegative")
    if p.d < 1e-12:
        return 1 + K * p.C * h_max
    ratio = p.rho ** (-p.d)
    return 1 + p.C * K * (6 * p.nu1) ** (-p.d) * (ratio**h_max - 1) / (ratio - 1)
