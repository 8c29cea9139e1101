"""Pareto dominance, non-dominated sorting and crowding distance (minimization)."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and better somewhere."""
    if len(a) != len(b):
        raise ValueError("vectors differ in dimension")
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def _as_matrix(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 0)
    if arr.ndim == 1:
        arr = arr.reshape(len(arr), -1)
    if arr.ndim != 2:
        raise ValueError("points must be a sequence of equal-length vectors")
    return arr


def dominance_matrix(points) -> np.ndarray:
    """``D[i, j]`` is True when point ``i`` dominates point ``j``."""
    p = _as_matrix(points)
    le = (p[:, None, :] <= p[None, :, :]).all(axis=2)
    lt = (p[:, None, :] < p[None, :, :]).any(axis=2)
    return le & lt


def fast_nondominated_sort(points) -> list[list[int]]:
    """Partition point indices into successive non-dominated fronts."""
    p = _as_matrix(points)
    n = len(p)
    if n == 0:
        return []
    if not np.isfinite(p).all():
        raise ValueError("points must be finite")
    dom = dominance_matrix(p)
    dominated_by_count = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if dominated_by_count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                dominated_by_count[j] -= 1
                if dominated_by_count[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def nondominated_indices(points) -> list[int]:
    """Indices of the first front; duplicates of a non-dominated point all survive."""
    p = _as_matrix(points)
    if len(p) == 0:
        return []
    dom = dominance_matrix(p)
    return [int(i) for i in np.flatnonzero(~dom.any(axis=0))]


def crowding_distance(front) -> list[float]:
    p = _as_matrix(front)
    n, k = p.shape
    if n == 0:
        raise ValueError("crowding distance of an empty front")
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for m in range(k):
        order = sorted(range(n), key=lambda i: (p[i, m], i))
        lo, hi = p[order[0], m], p[order[-1], m]
        dist[order[0]] = dist[order[-1]] = math.inf
        span = hi - lo
        if span == 0:
            continue
        for pos in range(1, n - 1):
            i = order[pos]
            if dist[i] != math.inf:
                dist[i] += (p[order[pos + 1], m] - p[order[pos - 1], m]) / span
    return dist
