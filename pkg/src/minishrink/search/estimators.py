"""scikit-learn style wrappers around the search algorithms.

Each estimator takes its control parameters in ``__init__`` (so
``get_params``/``set_params``/``clone`` work) and is fitted on a
:class:`MiniaturizationProblem`. Results land in trailing-underscore
attributes.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .nsga2 import nsga2
from .problem import OBJECTIVE_NAMES, Archive, MiniaturizationProblem, SearchParams
from .random_search import hybrid_rs
from .sway import DEFAULT_POOL_SIZE, sway


class _SearchEstimator(BaseEstimator):
    algorithm = ""

    def _params(self) -> SearchParams:
        return SearchParams(
            budget=self.budget,
            population=self.population,
            crossover_prob=getattr(self, "crossover_prob", 0.8),
            mutation_prob=getattr(self, "mutation_prob", 0.1),
            seed=self.seed,
            objectives=tuple(self.objectives),
        )

    def _run(self, problem: MiniaturizationProblem, params: SearchParams) -> Archive:
        raise NotImplementedError

    def fit(self, problem: MiniaturizationProblem, y=None):
        if not isinstance(problem, MiniaturizationProblem):
            raise TypeError("fit expects a MiniaturizationProblem")
        archive = self._run(problem, self._params())
        self.archive_ = archive
        self.n_evaluations_ = archive.evaluations_used
        self.pareto_configurations_ = archive.bitstrings
        self.pareto_front_ = archive.points()
        return self

    def predict(self, problem=None) -> list[str]:
        """Bitstrings of the fitted archive."""
        check_is_fitted(self, "archive_")
        return list(self.pareto_configurations_)


class NSGA2Search(_SearchEstimator):
    algorithm = "nsga2"

    def __init__(self, budget=250, population=10, crossover_prob=0.8, mutation_prob=0.1,
                 seed=0, objectives=OBJECTIVE_NAMES):
        self.budget = budget
        self.population = population
        self.crossover_prob = crossover_prob
        self.mutation_prob = mutation_prob
        self.seed = seed
        self.objectives = objectives

    def _run(self, problem, params):
        return nsga2(problem, params)


class HybridRandomSearch(_SearchEstimator):
    algorithm = "hybrid-rs"

    def __init__(self, budget=250, population=10, seed=0, objectives=OBJECTIVE_NAMES,
                 unique_draws=False):
        self.budget = budget
        self.population = population
        self.seed = seed
        self.objectives = objectives
        self.unique_draws = unique_draws

    def _run(self, problem, params):
        return hybrid_rs(problem, params, unique_draws=self.unique_draws)


class SwaySearch(_SearchEstimator):
    algorithm = "sway"

    def __init__(self, budget=250, population=10, seed=0, objectives=OBJECTIVE_NAMES,
                 pool_size=DEFAULT_POOL_SIZE, evaluate_leaves=False):
        self.budget = budget
        self.population = population
        self.seed = seed
        self.objectives = objectives
        self.pool_size = pool_size
        self.evaluate_leaves = evaluate_leaves

    def _run(self, problem, params):
        return sway(problem, params, pool_size=self.pool_size, evaluate_leaves=self.evaluate_leaves)


ESTIMATORS = {cls.algorithm: cls for cls in (NSGA2Search, HybridRandomSearch, SwaySearch)}


def make_search(algorithm: str, **params) -> _SearchEstimator:
    try:
        cls = ESTIMATORS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ESTIMATORS)}") from None
    accepted = cls._get_param_names()
    return cls(**{k: v for k, v in params.items() if k in accepted})
