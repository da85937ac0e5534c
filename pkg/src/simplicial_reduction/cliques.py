"""Clique counting and clique-number computation on proximity graphs.

Two independent routes to the clique number are provided: an exact
branch-and-bound over integer bitsets for arbitrary graphs, and a sweep
for the uniform norm that counts points in axis-aligned boxes of side
``epsilon`` anchored at data points.
"""

from __future__ import annotations

import sys
from collections.abc import Sequence

import numpy as np

from .geometry import PointConfiguration, neighbor_sets, proximity_pairs


def clique_counts(adj: Sequence[set[int]], max_size: int | None = None,
                  budget: int | None = None) -> tuple[list[int], bool]:
    """Counts N_1, N_2, ... of cliques by size, generated level by level.

    Once a level holds more than ``budget`` cliques its count is recorded
    but it is not expanded; the second return value tells whether the
    counts run all the way to the clique number.
    """
    n = len(adj)
    counts = [n] if n else []
    if n == 0:
        return counts, True
    upper = [frozenset(w for w in adj[v] if w > v) for v in range(n)]
    level = upper
    size = 1
    while max_size is None or size < max_size:
        total = sum(len(common) for common in level)
        if total == 0:
            return counts, True
        counts.append(total)
        if budget is not None and total > budget:
            return counts, False
        level = [common & upper[w] for common in level for w in common]
        size += 1
    return counts, True


def max_clique_size(adj: Sequence[set[int]]) -> int:
    """Exact clique number by branch and bound with greedy-colouring bounds."""
    n = len(adj)
    if n == 0:
        return 0
    order = sorted(range(n), key=lambda v: len(adj[v]), reverse=True)
    pos = {v: i for i, v in enumerate(order)}
    nbr = [0] * n
    for v in range(n):
        m = 0
        for w in adj[v]:
            m |= 1 << pos[w]
        nbr[pos[v]] = m

    best = 1

    def colour_sort(cand: int) -> tuple[list[int], list[int]]:
        verts, bounds = [], []
        uncoloured = cand
        colour = 0
        while uncoloured:
            colour += 1
            q = uncoloured
            while q:
                low = q & -q
                v = low.bit_length() - 1
                q &= ~low & ~nbr[v]
                uncoloured &= ~low
                verts.append(v)
                bounds.append(colour)
        return verts, bounds

    def expand(cand: int, size: int) -> None:
        nonlocal best
        verts, bounds = colour_sort(cand)
        for i in range(len(verts) - 1, -1, -1):
            if size + bounds[i] <= best:
                return
            v = verts[i]
            sub = cand & nbr[v]
            if sub:
                expand(sub, size + 1)
            elif size + 1 > best:
                best = size + 1
            cand &= ~(1 << v)

    limit = sys.getrecursionlimit()
    if limit < n + 100:
        sys.setrecursionlimit(n + 100)
    expand((1 << n) - 1, 0)
    return best


def uniform_box_clique(config: PointConfiguration, epsilon: float) -> int:
    """Clique number of the uniform-norm proximity graph via box counting.

    Under the uniform norm a point set is a clique iff, in every coordinate,
    its spread is below ``epsilon``. On the torus that needs
    epsilon <= a/3 (otherwise three points can be pairwise close without
    fitting in one short arc); ValueError is raised outside that range.
    """
    torus = config.torus
    if torus.metric != "uniform":
        raise ValueError("box counting only applies to the uniform norm")
    if torus.periodic and epsilon > torus.a / 3:
        raise ValueError("box counting needs epsilon <= a/3 on the torus")
    pts = config.points
    if len(pts) == 0:
        return 0
    return _box_max(pts, epsilon, torus.a if torus.periodic else None, 0)


def _box_max(pts: np.ndarray, eps: float, period: float | None, axis: int) -> int:
    col = pts[:, axis]
    if axis == pts.shape[1] - 1:
        off = col[None, :] - col[:, None]
        if period is not None:
            off = np.mod(off, period)
        return int(((off >= 0) & (off < eps)).sum(axis=1).max())
    best = 0
    for x0 in col:
        off = col - x0
        if period is not None:
            off = np.mod(off, period)
        inside = (off >= 0) & (off < eps)
        if int(inside.sum()) > best:
            best = max(best, _box_max(pts[inside], eps, period, axis + 1))
    return best


def clique_number(config: PointConfiguration, epsilon: float, method: str = "auto") -> int:
    """Clique number of the proximity graph at threshold ``epsilon``.

    ``method`` is ``"box"``, ``"branch"`` or ``"auto"`` (box counting when it
    applies, branch and bound otherwise).
    """
    torus = config.torus
    box_ok = torus.metric == "uniform" and (not torus.periodic or epsilon <= torus.a / 3)
    if method == "box" or (method == "auto" and box_ok):
        return uniform_box_clique(config, epsilon)
    if method not in ("auto", "branch"):
        raise ValueError(f"unknown clique method {method!r}")
    return max_clique_size(neighbor_sets(config.n, proximity_pairs(config, epsilon)))
