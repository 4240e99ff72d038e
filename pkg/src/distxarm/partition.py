"""Dyadic covering tree over the unit interval.

Node ``(h, i)`` at depth ``h`` (``1 <= i <= 2**h``) owns the cell
``[(i - 1) / 2**h, i / 2**h]`` and is represented by the cell midpoint.
All endpoints are dyadic rationals, so the geometry checks below are done
with exact fractions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True, order=True)
class NodeId:
    depth: int
    index: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"negative depth: {self.depth}")
        if not 1 <= self.index <= 2**self.depth:
            raise ValueError(f"index {self.index} out of range for depth {self.depth}")

    def __repr__(self):
        return f"({self.depth},{self.index})"


ROOT = NodeId(0, 1)


@dataclass(frozen=True)
class Cell:
    node: NodeId
    lower: float
    upper: float
    rep_point: float

    def __contains__(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class SmoothnessParams:
    """Smoothness constants ``nu1``, ``rho`` and ``nu2`` of the partition."""

    nu1: float = 1.0
    rho: float = 0.5
    nu2: float = 0.5

    def __post_init__(self):
        if not self.nu1 > 0:
            raise ValueError("nu1 must be positive")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not self.nu2 > 0:
            raise ValueError("nu2 must be positive")

    def diameter(self, depth: int) -> float:
        """``nu1 * rho**depth``."""
        return self.nu1 * self.rho**depth


def children(node: NodeId) -> tuple[NodeId, NodeId]:
    h, i = node.depth, node.index
    return NodeId(h + 1, 2 * i - 1), NodeId(h + 1, 2 * i)


def parent(node: NodeId) -> NodeId:
    if node.depth == 0:
        raise ValueError("the root has no parent")
    return NodeId(node.depth - 1, (node.index + 1) // 2)


def _exact_bounds(node: NodeId) -> tuple[Fraction, Fraction]:
    width = Fraction(1, 2**node.depth)
    return (node.index - 1) * width, node.index * width


def cell_of(node: NodeId) -> Cell:
    lo, hi = _exact_bounds(node)
    return Cell(node, float(lo), float(hi), float((lo + hi) / 2))


def rep_point(node: NodeId) -> float:
    return (2 * node.index - 1) / 2 ** (node.depth + 1)


def node_containing(x: float, depth: int) -> NodeId:
    """Node at ``depth`` whose cell contains ``x``.

    A point on a shared endpoint belongs to the left cell, except ``x = 0``.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    scaled = Fraction(x) * 2**depth
    idx = scaled.numerator // scaled.denominator
    if scaled == idx and idx > 0:
        return NodeId(depth, idx)
    return NodeId(depth, min(idx + 1, 2**depth))


def nodes_containing(x: float, depth: int) -> list[NodeId]:
    """All nodes at ``depth`` whose closed cell contains ``x`` (one or two)."""
    first = node_containing(x, depth)
    out = [first]
    lo, hi = _exact_bounds(first)
    if Fraction(x) == hi and first.index < 2**depth:
        out.append(NodeId(depth, first.index + 1))
    return out


def semi_metric(x: float, y: float) -> float:
    return abs(x - y)


def check_assumptions(params: SmoothnessParams, max_depth: int) -> list[str]:
    """Check bounded diameters and well-shaped cells for depths ``0..max_depth``.

    All cells at a given depth are congruent translates under the dyadic
    partition with midpoint representatives, so one cell per depth decides
    the whole level. Returns human-readable violation strings; an empty list
    means both properties hold.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    nu1 = Fraction(params.nu1)
    nu2 = Fraction(params.nu2)
    rho = Fraction(params.rho)
    violations = []
    if nu2 > nu1:
        violations.append(f"nu2={params.nu2:g} exceeds nu1={params.nu1:g}")
    for h in range(max_depth + 1):
        half_width = Fraction(1, 2 ** (h + 1))
        scale = rho**h
        if half_width > nu1 * scale:
            violations.append(
                f"h={h}: sup distance from representative {float(half_width):.6g} "
                f"exceeds nu1*rho^h={float(nu1 * scale):.6g}"
            )
        if nu2 * scale > half_width:
            violations.append(
                f"h={h}: ball radius nu2*rho^h={float(nu2 * scale):.6g} "
                f"does not fit in a cell of half-width {float(half_width):.6g}"
            )
    return violations
