"""Multi-objective miniaturization of configurable interpreters for constrained devices."""

from .devices import Device, Measurement, ObjectiveVector, device_count, dsr, fits, nda, udr, usr
from .evaluation import (
    CostModel,
    EvaluationCache,
    EvaluationRecord,
    EvaluatorError,
    ExternalEvaluator,
    SimulatedEvaluator,
    evaluate,
    external_evaluate,
    percentage_change,
    simulated_evaluate,
)
from .feature_model import (
    AppSpec,
    Configuration,
    DependencyRule,
    Feature,
    FeatureModel,
    is_valid,
    load_app_spec,
    load_feature_model,
    random_valid,
    repair,
)
from .search import (
    Archive,
    HybridRandomSearch,
    MiniaturizationProblem,
    NSGA2Search,
    SearchParams,
    SwaySearch,
    hybrid_rs,
    nsga2,
    sway,
)

__version__ = "0.1.0"

__all__ = [
    "AppSpec",
    "Archive",
    "Configuration",
    "CostModel",
    "DependencyRule",
    "Device",
    "EvaluationCache",
    "EvaluationRecord",
    "EvaluatorError",
    "ExternalEvaluator",
    "Feature",
    "FeatureModel",
    "HybridRandomSearch",
    "Measurement",
    "MiniaturizationProblem",
    "NSGA2Search",
    "ObjectiveVector",
    "SearchParams",
    "SimulatedEvaluator",
    "SwaySearch",
    "device_count",
    "dsr",
    "evaluate",
    "external_evaluate",
    "fits",
    "hybrid_rs",
    "is_valid",
    "load_app_spec",
    "load_feature_model",
    "nda",
    "nsga2",
    "percentage_change",
    "random_valid",
    "repair",
    "simulated_evaluate",
    "sway",
    "udr",
    "usr",
]
