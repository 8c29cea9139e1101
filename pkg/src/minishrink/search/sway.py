"""SWAY-style sampling: cluster in decision space, evaluate only representatives."""

from __future__ import annotations

import math

import numpy as np

from ..evaluation import EvaluationRecord
from ..feature_model import Configuration
from ..pareto import dominates
from .problem import Archive, EvaluationSession, MiniaturizationProblem, SearchParams

DEFAULT_POOL_SIZE = 10_000


def _better(a: EvaluationRecord, b: EvaluationRecord, objectives) -> bool:
    if a.feasible and not b.feasible:
        return True
    if not a.feasible:
        return False
    return dominates(a.objectives.as_tuple(objectives), b.objectives.as_tuple(objectives))


def candidate_pool(problem: MiniaturizationProblem, size: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct repaired random configurations as a ``(n, bits)`` uint8 matrix."""
    seen: dict[tuple[int, ...], None] = {}
    for _ in range(size):
        seen.setdefault(problem.random_valid(rng).bits, None)
    return np.array(list(seen), dtype=np.uint8).reshape(len(seen), problem.n_bits)


def _farthest(items: np.ndarray, row: np.ndarray) -> int:
    return int(np.argmax((items != row).sum(axis=1)))


def sway(
    problem: MiniaturizationProblem,
    params: SearchParams,
    pool_size: int = DEFAULT_POOL_SIZE,
    evaluate_leaves: bool = False,
) -> Archive:
    """Recursive binary split of a candidate pool by Hamming geometry.

    At each split two far-apart representatives are evaluated and the half
    led by a dominated representative is dropped (both halves survive when
    neither dominates). Recursion stops below ``sqrt(pool)`` members. With
    ``evaluate_leaves`` the members of the surviving clusters are evaluated
    too, while budget remains.
    """
    rng = np.random.default_rng(params.seed)
    session = EvaluationSession(problem, params.budget, params.objectives)
    pool = candidate_pool(problem, pool_size, rng)
    enough = math.sqrt(len(pool))
    objs = params.objectives
    leaves: list[np.ndarray] = []
    splits = 0

    def to_config(row: np.ndarray) -> Configuration:
        return Configuration(tuple(int(b) for b in row))

    def recurse(items: np.ndarray) -> None:
        nonlocal splits
        if len(items) < enough or session.exhausted:
            leaves.append(items)
            return
        anchor = items[int(rng.integers(len(items)))]
        east = items[_farthest(items, anchor)]
        west = items[_farthest(items, east)]
        c = int((east != west).sum())
        if c == 0:
            leaves.append(items)
            return
        rec_e, rec_w = session.evaluate_batch([to_config(east), to_config(west)])
        if rec_e is None or rec_w is None:
            leaves.append(items)
            return
        splits += 1
        a = (items != east).sum(axis=1).astype(float)
        b = (items != west).sum(axis=1).astype(float)
        proj = (a * a + c * c - b * b) / (2 * c)
        order = np.argsort(proj, kind="stable")
        half = len(items) // 2
        east_half, west_half = items[order[:half]], items[order[half:]]
        if not _better(rec_w, rec_e, objs):
            recurse(east_half)
        if not _better(rec_e, rec_w, objs):
            recurse(west_half)

    recurse(pool)

    if evaluate_leaves:
        for leaf in leaves:
            if session.exhausted:
                break
            session.evaluate_batch([to_config(row) for row in leaf])

    return session.archive(
        "sway",
        params.seed,
        pool_size=len(pool),
        splits=splits,
        leaves=len(leaves),
        depth_bound=math.ceil(math.log2(max(len(pool) / enough, 1.0))),
    )
