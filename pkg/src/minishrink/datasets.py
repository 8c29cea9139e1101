"""Shipped data: the 86-feature Duktape model, its cost model, devices, apps."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .devices import Device, load_devices
from .evaluation import CostModel, load_cost_model
from .feature_model import AppSpec, FeatureModel, load_app_spec, load_feature_model

FEATURE_MODEL = "duktape86.json"
COST_MODEL = "duktape86_costs.json"
DEVICES = "devices5.json"


def data_path(name: str) -> Path:
    return Path(str(resources.files("minishrink") / "data" / name))


def load_duktape86() -> FeatureModel:
    return load_feature_model(data_path(FEATURE_MODEL))


def load_duktape86_costs(model: FeatureModel | None = None) -> CostModel:
    return load_cost_model(data_path(COST_MODEL), model)


def load_devices5() -> list[Device]:
    return load_devices(data_path(DEVICES))


def sunspider_app_names() -> list[str]:
    return sorted(p.stem for p in data_path("apps").glob("*.json"))


def load_sunspider_app(name: str, model: FeatureModel | None = None) -> AppSpec:
    path = data_path("apps") / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(f"no shipped app spec named {name!r}")
    return load_app_spec(path, model)


def load_sunspider_apps(model: FeatureModel | None = None) -> list[AppSpec]:
    return [load_sunspider_app(n, model) for n in sunspider_app_names()]


def resolve_app(arg: str, model: FeatureModel | None = None) -> AppSpec:
    """Load an app spec from a file path, falling back to a shipped app name."""
    path = Path(arg)
    if path.exists():
        return load_app_spec(path, model)
    stem = path.stem if path.suffix == ".json" else arg
    if stem in sunspider_app_names():
        return load_sunspider_app(stem, model)
    raise FileNotFoundError(f"app spec not found: {arg}")
