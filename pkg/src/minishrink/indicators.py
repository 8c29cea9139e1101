"""Quality indicators and statistics for comparing search outputs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .pareto import dominates, nondominated_indices

__all__ = [
    "NormalizedFront",
    "cliffs_delta",
    "dominates",
    "hypervolume",
    "mann_whitney_u",
    "normalization_bounds",
    "normalize",
    "pfs_contribution",
]

EXACT_U_MAX_N = 8


@dataclass(frozen=True)
class NormalizedFront:
    points: np.ndarray
    ideal: np.ndarray
    nadir: np.ndarray


def normalization_bounds(fronts: Sequence[Sequence[Sequence[float]]]) -> tuple[np.ndarray, np.ndarray]:
    """Ideal and nadir of the non-dominated set of all ``fronts`` combined."""
    pts = [tuple(p) for f in fronts for p in f]
    if not pts:
        raise ValueError("cannot normalize without points")
    arr = np.asarray(pts, dtype=float)
    nd = arr[nondominated_indices(arr)]
    return nd.min(axis=0), nd.max(axis=0)


def normalize(points, ideal, nadir) -> NormalizedFront:
    """Scale objectives to ``(v - ideal) / (nadir - ideal)``; zero ranges map to 0."""
    ideal = np.asarray(ideal, dtype=float)
    nadir = np.asarray(nadir, dtype=float)
    if (ideal > nadir).any():
        raise ValueError("ideal must not exceed nadir")
    arr = np.asarray(points, dtype=float).reshape(-1, len(ideal))
    span = nadir - ideal
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (arr - ideal) / safe, 0.0)
    return NormalizedFront(out, ideal, nadir)


# -- hypervolume ----------------------------------------------------------------------


def hypervolume(front, reference) -> float:
    """Exact volume dominated by ``front`` inside the box bounded by ``reference``.

    Points are clipped to the reference first. Computed by slicing along the
    last objective and recursing down to a two-dimensional sweep.
    """
    ref = np.asarray(reference, dtype=float)
    arr = np.asarray(front, dtype=float)
    if arr.size == 0:
        return 0.0
    arr = arr.reshape(-1, arr.shape[-1]) if arr.ndim > 1 else arr.reshape(1, -1)
    if arr.shape[1] != len(ref):
        raise ValueError(f"points have {arr.shape[1]} objectives, reference has {len(ref)}")
    arr = np.minimum(arr, ref)
    arr = arr[(arr < ref).all(axis=1)]
    if len(arr) == 0:
        return 0.0
    return float(_hv(_filter(arr), ref))


def _filter(arr: np.ndarray) -> np.ndarray:
    arr = np.unique(arr, axis=0)
    return arr[nondominated_indices(arr)] if len(arr) > 1 else arr


def _hv(arr: np.ndarray, ref: np.ndarray) -> float:
    k = arr.shape[1]
    if k == 1:
        return float(ref[0] - arr[:, 0].min())
    if k == 2:
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        xs, ys = arr[order, 0], arr[order, 1]
        best = np.minimum.accumulate(ys)
        widths = np.append(xs[1:], ref[0]) - xs
        return float(np.sum(widths * (ref[1] - best)))
    order = np.argsort(arr[:, -1], kind="stable")
    arr = arr[order]
    zs = np.append(arr[1:, -1], ref[-1])
    total = 0.0
    for i in range(len(arr)):
        depth = zs[i] - arr[i, -1]
        if depth <= 0:
            continue
        total += _hv(_filter(arr[: i + 1, :-1]), ref[:-1]) * depth
    return total


# -- Pareto front size ------------------------------------------------------------------


def pfs_contribution(named_fronts: Mapping[str, Sequence[Sequence[float]]]) -> dict[str, tuple[int, float]]:
    """Each algorithm's share of the combined non-dominated front.

    The combined front holds distinct objective vectors. A vector found by
    several algorithms is credited to each of them, so percentages can sum
    past 100.
    """
    if not named_fronts:
        raise ValueError("need at least one algorithm")
    distinct = {name: {tuple(map(float, p)) for p in pts} for name, pts in named_fronts.items()}
    union = sorted(set().union(*distinct.values()))
    if not union:
        return {name: (0, 0.0) for name in named_fronts}
    combined = {union[i] for i in nondominated_indices(union)}
    out = {}
    for name, pts in distinct.items():
        count = len(pts & combined)
        out[name] = (count, 100.0 * count / len(combined))
    return out


# -- statistics ------------------------------------------------------------------------------


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = mid
        i = j + 1
    return ranks


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test.

    Returns ``(U, p)`` where ``U`` counts pairs with ``a > b`` plus half the
    ties. The p-value is exact (enumerating every split of the pooled
    midranks) when both samples have at most 8 members, otherwise the normal
    approximation with tie and continuity corrections.
    """
    a, b = list(map(float, sample_a)), list(map(float, sample_b))
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    ranks = _midranks(a + b)
    offset = na * (na + 1) / 2
    u = sum(ranks[:na]) - offset
    mean = na * nb / 2
    observed = abs(u - mean)

    if max(na, nb) <= EXACT_U_MAX_N:
        total = extreme = 0
        eps = 1e-9
        for combo in itertools.combinations(ranks, na):
            total += 1
            if abs(sum(combo) - offset - mean) >= observed - eps:
                extreme += 1
        return u, min(1.0, extreme / total)

    n = na + nb
    ties = {}
    for v in a + b:
        ties[v] = ties.get(v, 0) + 1
    tie_term = sum(t ** 3 - t for t in ties.values()) / (n * (n - 1))
    var = na * nb / 12 * ((n + 1) - tie_term)
    if var <= 0:
        return u, 1.0
    z = max(observed - 0.5, 0.0) / math.sqrt(var)
    return u, min(1.0, math.erfc(z / math.sqrt(2)))


def effect_magnitude(delta: float) -> str:
    d = abs(delta)
    if d < 0.147:
        return "negligible"
    if d < 0.33:
        return "small"
    if d < 0.474:
        return "medium"
    return "large"


def cliffs_delta(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, str]:
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    gt = int((a[:, None] > b[None, :]).sum())
    lt = int((a[:, None] < b[None, :]).sum())
    delta = (gt - lt) / (a.size * b.size)
    return delta, effect_magnitude(delta)
