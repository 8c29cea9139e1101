from ..pareto import crowding_distance, fast_nondominated_sort
from .estimators import ESTIMATORS, HybridRandomSearch, NSGA2Search, SwaySearch, make_search
from .nsga2 import nsga2
from .problem import (
    OBJECTIVE_NAMES,
    Archive,
    EvaluationSession,
    MiniaturizationProblem,
    SearchParams,
    nondominated_records,
)
from .random_search import hybrid_rs
from .sway import sway

ALGORITHMS = {"nsga2": nsga2, "hybrid-rs": hybrid_rs, "sway": sway}

__all__ = [
    "ALGORITHMS",
    "Archive",
    "ESTIMATORS",
    "EvaluationSession",
    "HybridRandomSearch",
    "MiniaturizationProblem",
    "NSGA2Search",
    "OBJECTIVE_NAMES",
    "SearchParams",
    "SwaySearch",
    "crowding_distance",
    "fast_nondominated_sort",
    "hybrid_rs",
    "make_search",
    "nondominated_records",
    "nsga2",
    "sway",
]
