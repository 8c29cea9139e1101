"""Problem context, search parameters, budgeted evaluation and archives."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from ..devices import Device
from ..evaluation import EvaluationRecord, Evaluator, as_evaluator, evaluate
from ..feature_model import AppSpec, Configuration, FeatureModel, is_valid, random_valid, repair
from ..pareto import nondominated_indices

OBJECTIVE_NAMES = ("udr", "cs", "mu", "et")


def check_objectives(objectives: Iterable[str]) -> tuple[str, ...]:
    objs = tuple(o.lower() for o in objectives)
    if not objs:
        raise ValueError("at least one objective is required")
    bad = [o for o in objs if o not in OBJECTIVE_NAMES]
    if bad:
        raise ValueError(f"unknown objectives {bad}; choose from {OBJECTIVE_NAMES}")
    if len(set(objs)) != len(objs):
        raise ValueError("objectives must not repeat")
    return objs


@dataclass(frozen=True)
class SearchParams:
    budget: int = 250
    population: int = 10
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    seed: int = 0
    objectives: tuple[str, ...] = OBJECTIVE_NAMES

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.budget < self.population:
            raise ValueError(f"budget ({self.budget}) must be >= population ({self.population})")
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        object.__setattr__(self, "objectives", check_objectives(self.objectives))


@dataclass
class MiniaturizationProblem:
    """Everything a search needs: feature space, app, target devices, evaluator."""

    model: FeatureModel
    app: AppSpec
    devices: Sequence[Device]
    evaluator: Evaluator
    usr_orientation: str = "as_written"
    n_jobs: int = 1

    def __post_init__(self):
        self.evaluator = as_evaluator(self.evaluator)
        unknown = set(self.app.compulsory_ids) - set(self.model.index_of)
        if unknown:
            raise ValueError(f"app {self.app.name}: unknown compulsory ids {sorted(unknown)}")
        if not self.devices:
            raise ValueError("at least one device is required")
        if self.n_jobs < 1:
            raise ValueError("n_jobs must be >= 1")

    @property
    def n_bits(self) -> int:
        return self.model.n_features

    @property
    def compulsory(self) -> frozenset[int]:
        return self.app.compulsory_ids

    def free_indices(self) -> list[int]:
        return self.model.free_indices(self.compulsory)

    def repair(self, config: Configuration) -> Configuration:
        return repair(config, self.model, self.compulsory)

    def is_valid(self, config: Configuration) -> bool:
        return is_valid(config, self.model, self.compulsory)

    def random_valid(self, rng: np.random.Generator) -> Configuration:
        return random_valid(self.model, self.compulsory, rng)


@dataclass(frozen=True)
class Archive:
    """Feasible, mutually non-dominated records of one search run."""

    records: tuple[EvaluationRecord, ...]
    algorithm: str
    seed: int
    evaluations_used: int
    objectives: tuple[str, ...] = OBJECTIVE_NAMES
    stats: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def bitstrings(self) -> list[str]:
        return [r.config.bitstring for r in self.records]

    def points(self, objectives: Sequence[str] | None = None) -> list[tuple[float, ...]]:
        objs = tuple(objectives or self.objectives)
        return [r.objectives.as_tuple(objs) for r in self.records]


def nondominated_records(records: Iterable[EvaluationRecord], objectives: Sequence[str]) -> list[EvaluationRecord]:
    feasible = [r for r in records if r.feasible]
    if not feasible:
        return []
    pts = [r.objectives.as_tuple(objectives) for r in feasible]
    keep = [feasible[i] for i in nondominated_indices(pts)]
    return sorted(keep, key=lambda r: r.config.bitstring)


class EvaluationSession:
    """Budget accounting for one run.

    Each configuration first requested in this run consumes one unit of
    budget, whether or not the shared cache already knows it; repeats are
    free. Batches are admitted in order, so the outcome does not depend on
    ``n_jobs``.
    """

    def __init__(self, problem: MiniaturizationProblem, budget: int, objectives: Sequence[str]):
        self.problem = problem
        self.budget = budget
        self.objectives = tuple(objectives)
        self.records: dict[str, EvaluationRecord] = {}
        self.requests = 0
        self.evaluator_calls = 0
        self.repeats = 0

    @property
    def used(self) -> int:
        return len(self.records)

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.budget

    def _evaluate(self, config: Configuration) -> EvaluationRecord:
        p = self.problem
        return evaluate(config, p.app, p.model, p.devices, p.evaluator, p.usr_orientation)

    def evaluate_batch(self, configs: Sequence[Configuration]) -> list[EvaluationRecord | None]:
        """Evaluate ``configs`` in order; entries past the budget come back None."""
        admitted: list[Configuration | None] = []
        fresh: dict[str, Configuration] = {}
        for c in configs:
            if not self.problem.is_valid(c):
                raise ValueError(f"refusing to evaluate invalid configuration {c.bitstring}")
            key = c.bitstring
            if key in self.records or key in fresh:
                admitted.append(c)
            elif self.used + len(fresh) < self.budget:
                fresh[key] = c
                admitted.append(c)
            else:
                admitted.append(None)

        new = list(fresh.values())
        if self.problem.n_jobs > 1 and len(new) > 1:
            with ThreadPoolExecutor(max_workers=self.problem.n_jobs) as pool:
                results = list(pool.map(self._evaluate, new))
        else:
            results = [self._evaluate(c) for c in new]
        for c, rec in zip(new, results):
            self.records[c.bitstring] = rec
            self.evaluator_calls += rec.evaluator_calls

        out: list[EvaluationRecord | None] = []
        for c in admitted:
            if c is None:
                out.append(None)
                continue
            self.requests += 1
            if c.bitstring in fresh:
                out.append(self.records[fresh.pop(c.bitstring).bitstring])
            else:
                # repeat within the run: free, served from the session table
                self.repeats += 1
                out.append(replace(self.records[c.bitstring], evaluator_calls=0))
        return out

    def archive(self, algorithm: str, seed: int, **stats) -> Archive:
        recs = nondominated_records(self.records.values(), self.objectives)
        stats.setdefault("requests", self.requests)
        stats.setdefault("evaluator_calls", self.evaluator_calls)
        stats.setdefault("repeats", self.repeats)
        return Archive(tuple(recs), algorithm, seed, self.used, self.objectives, stats)
