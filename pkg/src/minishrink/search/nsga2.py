"""NSGA-II over repaired bit-vectors."""

from __future__ import annotations

import numpy as np

from ..evaluation import EvaluationRecord
from ..feature_model import Configuration
from ..pareto import crowding_distance, fast_nondominated_sort
from .problem import Archive, EvaluationSession, MiniaturizationProblem, SearchParams

# generations in a row without a single new configuration before giving up
MAX_STALLED_GENERATIONS = 200


def rank_and_crowding(pop: list[EvaluationRecord], objectives) -> tuple[list[int], list[float]]:
    """Front index and crowding distance of every member.

    Infeasible members share one rank behind every feasible front.
    """
    n = len(pop)
    rank = [0] * n
    crowd = [0.0] * n
    feasible = [i for i, r in enumerate(pop) if r.feasible]
    pts = [pop[i].objectives.as_tuple(objectives) for i in feasible]
    fronts = fast_nondominated_sort(pts) if pts else []
    for level, front in enumerate(fronts):
        dists = crowding_distance([pts[j] for j in front])
        for j, d in zip(front, dists):
            rank[feasible[j]] = level
            crowd[feasible[j]] = d
    infeasible_rank = len(fronts)
    for i, r in enumerate(pop):
        if not r.feasible:
            rank[i] = infeasible_rank
    return rank, crowd


def _sort_key(rank: int, crowd: float, bits: str):
    return (rank, -crowd, bits)


def tournament(rng: np.random.Generator, pop, rank, crowd) -> EvaluationRecord:
    i, j = (int(x) for x in rng.integers(len(pop), size=2))
    ki = _sort_key(rank[i], crowd[i], pop[i].config.bitstring)
    kj = _sort_key(rank[j], crowd[j], pop[j].config.bitstring)
    return pop[i] if ki <= kj else pop[j]


def one_point_crossover(rng, a: list[int], b: list[int]) -> tuple[list[int], list[int]]:
    if len(a) < 2:
        return a[:], b[:]
    cut = int(rng.integers(1, len(a)))
    return a[:cut] + b[cut:], b[:cut] + a[cut:]


def mutate(rng, bits: list[int], free: list[int]) -> list[int]:
    if not free:
        return bits
    flips = rng.random(len(free)) < 1.0 / len(free)
    out = bits[:]
    for i, f in zip(free, flips):
        if f:
            out[i] ^= 1
    return out


def environmental_selection(pool: list[EvaluationRecord], size: int, objectives) -> list[EvaluationRecord]:
    rank, crowd = rank_and_crowding(pool, objectives)
    order = sorted(range(len(pool)), key=lambda i: _sort_key(rank[i], crowd[i], pool[i].config.bitstring))
    return [pool[i] for i in order[:size]]


def make_offspring(
    rng, pop, params: SearchParams, problem: MiniaturizationProblem, free, ranking=None
) -> list[Configuration]:
    rank, crowd = ranking if ranking is not None else rank_and_crowding(pop, params.objectives)
    children: list[Configuration] = []
    while len(children) < params.population:
        p1 = tournament(rng, pop, rank, crowd)
        p2 = tournament(rng, pop, rank, crowd)
        c1, c2 = list(p1.config.bits), list(p2.config.bits)
        if rng.random() < params.crossover_prob:
            c1, c2 = one_point_crossover(rng, c1, c2)
        for child in (c1, c2):
            if rng.random() < params.mutation_prob:
                child = mutate(rng, child, free)
            children.append(problem.repair(Configuration(tuple(child))))
    return children[: params.population]


def nsga2(problem: MiniaturizationProblem, params: SearchParams) -> Archive:
    """Run NSGA-II until ``params.budget`` distinct configurations are evaluated.

    Offspring are repaired before evaluation; offspring already seen in the run
    cost nothing. The returned archive is the non-dominated feasible subset of
    every record evaluated during the run.
    """
    rng = np.random.default_rng(params.seed)
    session = EvaluationSession(problem, params.budget, params.objectives)
    free = problem.free_indices()

    initial = [problem.random_valid(rng) for _ in range(params.population)]
    pop = _unique([r for r in session.evaluate_batch(initial) if r is not None])

    ranking = rank_and_crowding(pop, params.objectives)
    generations = 0
    stalled = 0
    while not session.exhausted and stalled < MAX_STALLED_GENERATIONS:
        if pop:
            children = make_offspring(rng, pop, params, problem, free, ranking)
        else:
            children = [problem.random_valid(rng) for _ in range(params.population)]
        before = session.used
        evaluated = [r for r in session.evaluate_batch(children) if r is not None]
        stalled = stalled + 1 if session.used == before else 0
        current = {r.config.bitstring for r in pop}
        if any(r.config.bitstring not in current for r in evaluated):
            pop = environmental_selection(_unique(pop + evaluated), params.population, params.objectives)
            ranking = rank_and_crowding(pop, params.objectives)
        generations += 1

    return session.archive("nsga2", params.seed, generations=generations)


def _unique(records: list[EvaluationRecord]) -> list[EvaluationRecord]:
    seen = {}
    for r in records:
        seen.setdefault(r.config.bitstring, r)
    return list(seen.values())
