"""Random search with repair (hybrid-RS)."""

from __future__ import annotations

import numpy as np

from ..feature_model import Configuration
from .problem import Archive, EvaluationSession, MiniaturizationProblem, SearchParams

MAX_STALLED_BATCHES = 1000
# free-bit spaces up to this many bits are enumerated by permutation for unique draws
PERMUTATION_MAX_BITS = 20


class _UniqueDraws:
    """Raw bit patterns over the free positions, never repeating."""

    def __init__(self, rng: np.random.Generator, n_bits: int, free: list[int]):
        self.rng = rng
        self.n_bits = n_bits
        self.free = free
        self.seen: set[tuple[int, ...]] = set()
        self._perm = None
        self._pos = 0
        if len(free) <= PERMUTATION_MAX_BITS:
            self._perm = rng.permutation(1 << len(free))

    def next(self) -> Configuration | None:
        if self._perm is not None:
            if self._pos >= len(self._perm):
                return None
            code = int(self._perm[self._pos])
            self._pos += 1
            bits = [0] * self.n_bits
            for k, i in enumerate(self.free):
                bits[i] = (code >> k) & 1
            return Configuration(tuple(bits))
        for _ in range(10_000):
            raw = tuple(int(x) for x in self.rng.integers(0, 2, size=len(self.free)))
            if raw not in self.seen:
                self.seen.add(raw)
                bits = [0] * self.n_bits
                for i, b in zip(self.free, raw):
                    bits[i] = b
                return Configuration(tuple(bits))
        return None


def hybrid_rs(problem: MiniaturizationProblem, params: SearchParams, unique_draws: bool = False) -> Archive:
    """Sample repaired random configurations until the budget is spent.

    Draws are made in batches of ``params.population``. With ``unique_draws``
    the raw (pre-repair) patterns never repeat, so a budget equal to the size
    of the free space enumerates it completely.
    """
    rng = np.random.default_rng(params.seed)
    session = EvaluationSession(problem, params.budget, params.objectives)
    draws = _UniqueDraws(rng, problem.n_bits, problem.free_indices()) if unique_draws else None

    stalled = 0
    exhausted_space = False
    while not session.exhausted and stalled < MAX_STALLED_BATCHES and not exhausted_space:
        batch = []
        for _ in range(params.population):
            if draws is None:
                batch.append(problem.random_valid(rng))
                continue
            raw = draws.next()
            if raw is None:
                exhausted_space = True
                break
            batch.append(problem.repair(raw))
        before = session.used
        session.evaluate_batch(batch)
        stalled = stalled + 1 if session.used == before else 0

    return session.archive("hybrid-rs", params.seed)
