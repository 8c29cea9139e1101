"""Feature space of a configurable interpreter and configuration repair.

A configuration is a fixed-length bit-vector over the optional features of a
:class:`FeatureModel`. Bit ``i`` set to 1 means the ``i``-th feature is flipped
from its default value to its modified value; 0 keeps the default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

RULE_KINDS = ("implies_flip", "all_equal", "exclusive_group")
ROM_POLICIES = ("deactivate", "activate_all_reset")


class FeatureModelError(ValueError):
    """Base class for problems with feature-model or app-spec files."""


class ModelParseError(FeatureModelError):
    pass


class ModelValidationError(FeatureModelError):
    pass


Scalar = bool | int


@dataclass(frozen=True)
class Feature:
    id: int
    name: str
    default_value: Scalar
    modified_value: Scalar
    category: str = ""

    def __post_init__(self):
        if self.id < 1:
            raise ModelValidationError(f"feature id must be positive, got {self.id}")
        if _same_scalar(self.default_value, self.modified_value):
            raise ModelValidationError(
                f"feature {self.id} ({self.name}): default and modified values are equal"
            )


def _same_scalar(a, b) -> bool:
    # True == 1 in Python; a boolean and an integer are different settings here
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class DependencyRule:
    rule_id: str
    kind: str
    antecedent_ids: tuple[int, ...] = ()
    consequent_ids: tuple[int, ...] = ()
    group_ids: tuple[int, ...] = ()
    description: str = ""

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ModelValidationError(f"rule {self.rule_id}: unknown kind {self.kind!r}")
        if self.kind == "implies_flip":
            if not self.antecedent_ids or not self.consequent_ids:
                raise ModelValidationError(
                    f"rule {self.rule_id}: implies_flip needs antecedent and consequent ids"
                )
        elif len(self.group_ids) < 2:
            raise ModelValidationError(f"rule {self.rule_id}: {self.kind} needs a group of >= 2 ids")

    @property
    def member_ids(self) -> tuple[int, ...]:
        """Every feature id the rule mentions, in first-seen order."""
        seen = dict.fromkeys(self.antecedent_ids + self.consequent_ids + self.group_ids)
        return tuple(seen)


@dataclass(frozen=True)
class Configuration:
    bits: tuple[int, ...]

    def __post_init__(self):
        if not set(self.bits) <= {0, 1}:
            raise ValueError("configuration bits must be 0 or 1")

    @classmethod
    def zeros(cls, n: int) -> "Configuration":
        return cls((0,) * n)

    @classmethod
    def from_bitstring(cls, s: str) -> "Configuration":
        return cls(tuple(int(c) for c in s))

    @cached_property
    def bitstring(self) -> str:
        return "".join(map(str, self.bits))

    def __len__(self) -> int:
        return len(self.bits)

    def ones(self) -> int:
        return sum(self.bits)


@dataclass(frozen=True)
class AppSpec:
    name: str
    compulsory_ids: frozenset[int]
    base_memory_kb: float
    base_time_s: float

    def __post_init__(self):
        if self.base_memory_kb <= 0 or self.base_time_s <= 0:
            raise ModelValidationError(f"app {self.name}: baselines must be positive")


@dataclass(frozen=True)
class _CompiledRule:
    rule_id: str
    kind: str
    antecedent: tuple[int, ...]
    consequent: tuple[int, ...]
    group: tuple[int, ...]


@dataclass(frozen=True)
class FeatureModel:
    features: tuple[Feature, ...]
    rules: tuple[DependencyRule, ...] = ()
    rom_policy: str = "deactivate"
    name: str = ""

    def __post_init__(self):
        ids = [f.id for f in self.features]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ModelValidationError(f"duplicate feature ids: {dup}")
        known = set(ids)
        rule_ids = [r.rule_id for r in self.rules]
        if len(set(rule_ids)) != len(rule_ids):
            raise ModelValidationError("duplicate rule ids")
        for rule in self.rules:
            missing = [i for i in rule.member_ids if i not in known]
            if missing:
                raise ModelValidationError(
                    f"rule {rule.rule_id} references unknown feature ids {missing}"
                )
        if sum(r.kind == "exclusive_group" for r in self.rules) > 1:
            raise ModelValidationError("at most one exclusive_group rule is supported")
        if self.rom_policy not in ROM_POLICIES:
            raise ModelValidationError(f"unknown rom_policy {self.rom_policy!r}")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def n_features(self) -> int:
        return len(self.features)

    @cached_property
    def index_of(self) -> dict[int, int]:
        return {f.id: i for i, f in enumerate(self.features)}

    @cached_property
    def feature_by_id(self) -> dict[int, Feature]:
        return {f.id: f for f in self.features}

    @property
    def rom_group(self) -> tuple[int, ...]:
        for rule in self.rules:
            if rule.kind == "exclusive_group":
                return rule.group_ids
        return ()

    @cached_property
    def _compiled(self) -> tuple[_CompiledRule, ...]:
        idx = self.index_of
        out = []
        for rule in sorted(self.rules, key=lambda r: r.rule_id):
            out.append(
                _CompiledRule(
                    rule.rule_id,
                    rule.kind,
                    tuple(idx[i] for i in rule.antecedent_ids),
                    tuple(idx[i] for i in rule.consequent_ids),
                    tuple(idx[i] for i in rule.group_ids),
                )
            )
        return tuple(out)

    def indices(self, ids: Iterable[int]) -> list[int]:
        idx = self.index_of
        try:
            return sorted(idx[i] for i in ids)
        except KeyError as exc:
            raise ModelValidationError(f"unknown feature id {exc.args[0]}") from None

    @cached_property
    def _lock_cache(self) -> dict[frozenset, list[int]]:
        return {}

    def locked_indices(self, compulsory: Iterable[int]) -> list[int]:
        """Sorted bit positions of ``compulsory``, memoized per distinct set."""
        key = compulsory if isinstance(compulsory, frozenset) else frozenset(compulsory)
        cache = self._lock_cache
        idx = cache.get(key)
        if idx is None:
            if len(cache) > 1024:
                cache.clear()
            idx = cache[key] = self.indices(key)
        return idx

    def free_indices(self, compulsory: Iterable[int] = ()) -> list[int]:
        locked = set(self.indices(compulsory))
        return [i for i in range(self.n_features) if i not in locked]

    def with_rom_policy(self, policy: str) -> "FeatureModel":
        return FeatureModel(self.features, self.rules, policy, self.name)

    def flipped_ids(self, config: Configuration) -> list[int]:
        _check_length(config, self)
        return [f.id for f, b in zip(self.features, config.bits) if b]


def _check_length(config: Configuration, model: FeatureModel) -> None:
    if len(config.bits) != model.n_features:
        raise ValueError(
            f"configuration has {len(config.bits)} bits, model has {model.n_features} features"
        )


# -- file loading ---------------------------------------------------------------


def _read_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: {exc}") from exc


def _scalar(value, where: str) -> Scalar:
    if isinstance(value, bool) or isinstance(value, int):
        return value
    raise ModelParseError(f"{where}: expected boolean or integer, got {value!r}")


def feature_model_from_dict(data: Mapping) -> FeatureModel:
    try:
        raw_features = data["features"]
        raw_rules = data.get("rules", [])
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelParseError(f"feature model is missing key {exc}") from None
    try:
        features = tuple(
            Feature(
                id=int(f["id"]),
                name=str(f["name"]),
                default_value=_scalar(f["default"], f"feature {f['id']} default"),
                modified_value=_scalar(f["modified"], f"feature {f['id']} modified"),
                category=str(f.get("category", "")),
            )
            for f in raw_features
        )
        rules = tuple(
            DependencyRule(
                rule_id=str(r["rule_id"]),
                kind=r["kind"],
                antecedent_ids=tuple(int(i) for i in r.get("antecedent", ())),
                consequent_ids=tuple(int(i) for i in r.get("consequent", ())),
                group_ids=tuple(int(i) for i in r.get("group", ())),
                description=str(r.get("description", "")),
            )
            for r in raw_rules
        )
    except (KeyError, TypeError) as exc:
        raise ModelParseError(f"malformed feature model entry: {exc!r}") from None
    return FeatureModel(
        features=features,
        rules=rules,
        rom_policy=data.get("rom_policy", "deactivate"),
        name=str(data.get("name", "")),
    )


def load_feature_model(path) -> FeatureModel:
    """Load a feature model from a JSON document.

    Raises:
        ModelParseError: the file is unreadable or structurally malformed.
        ModelValidationError: duplicate ids, dangling rule references, etc.
    """
    return feature_model_from_dict(_read_json(path))


def feature_model_to_dict(model: FeatureModel) -> dict:
    return {
        "name": model.name,
        "rom_policy": model.rom_policy,
        "features": [
            {
                "id": f.id,
                "name": f.name,
                "default": f.default_value,
                "modified": f.modified_value,
                "category": f.category,
            }
            for f in model.features
        ],
        "rules": [
            {
                "rule_id": r.rule_id,
                "kind": r.kind,
                "antecedent": list(r.antecedent_ids),
                "consequent": list(r.consequent_ids),
                "group": list(r.group_ids),
                "description": r.description,
            }
            for r in model.rules
        ],
    }


def app_spec_from_dict(data: Mapping, model: FeatureModel | None = None) -> AppSpec:
    try:
        app = AppSpec(
            name=str(data["name"]),
            compulsory_ids=frozenset(int(i) for i in data.get("compulsory", ())),
            base_memory_kb=float(data["base_memory_kb"]),
            base_time_s=float(data["base_time_s"]),
        )
    except (KeyError, TypeError) as exc:
        raise ModelParseError(f"malformed app spec: missing or invalid {exc}") from None
    if model is not None:
        unknown = sorted(app.compulsory_ids - set(model.index_of))
        if unknown:
            raise ModelValidationError(f"app {app.name}: unknown compulsory ids {unknown}")
    return app


def load_app_spec(path, model: FeatureModel | None = None) -> AppSpec:
    return app_spec_from_dict(_read_json(path), model)


# -- encoding -------------------------------------------------------------------


def encode(model: FeatureModel, assignments: Mapping[int, Scalar]) -> Configuration:
    """Build a configuration from explicit feature values.

    Features absent from ``assignments`` stay at their default.
    """
    bits = [0] * model.n_features
    for fid, value in assignments.items():
        feature = model.feature_by_id.get(fid)
        if feature is None:
            raise ModelValidationError(f"unknown feature id {fid}")
        if _same_scalar(value, feature.modified_value):
            bits[model.index_of[fid]] = 1
        elif not _same_scalar(value, feature.default_value):
            raise ValueError(f"feature {fid}: {value!r} is neither its default nor modified value")
    return Configuration(tuple(bits))


def decode(model: FeatureModel, config: Configuration) -> dict[int, Scalar]:
    """Map every feature id to the value it takes under ``config``."""
    _check_length(config, model)
    return {
        f.id: (f.modified_value if b else f.default_value)
        for f, b in zip(model.features, config.bits)
    }


# -- validity and repair ----------------------------------------------------------


def _rule_holds(rule: _CompiledRule, bits: Sequence[int]) -> bool:
    # hot path for repair; plain loops beat any()/all() generators here
    if rule.kind == "implies_flip":
        for i in rule.antecedent:
            if bits[i]:
                for j in rule.consequent:
                    if not bits[j]:
                        return False
                return True
        return True
    group = rule.group
    if rule.kind == "all_equal":
        first = bits[group[0]]
        for i in group:
            if bits[i] != first:
                return False
        return True
    # exclusive_group
    on = 0
    for i in group:
        on += bits[i]
    if on == 0:
        return True
    return on == len(group) and sum(bits) == on


def is_valid(config: Configuration, model: FeatureModel, compulsory: Iterable[int] = ()) -> bool:
    _check_length(config, model)
    bits = config.bits
    for i in model.locked_indices(compulsory):
        if bits[i]:
            return False
    for rule in model._compiled:
        if not _rule_holds(rule, bits):
            return False
    return True


def repair(
    config: Configuration,
    model: FeatureModel,
    compulsory: Iterable[int] = (),
    rom_policy: str | None = None,
) -> Configuration:
    """Force ``config`` to satisfy every dependency rule and compulsory lock.

    Compulsory bits are cleared and locked first. Rules are then applied in
    ascending ``rule_id`` order, pass after pass, until none fires. A rule that
    would need to set a locked bit is resolved the other way: its triggering
    bits are cleared and locked instead. Bits are only ever cleared when they
    become locked, so the loop terminates.
    """
    _check_length(config, model)
    policy = rom_policy or model.rom_policy
    if policy not in ROM_POLICIES:
        raise ValueError(f"unknown rom_policy {policy!r}")
    bits = list(config.bits)
    locked = [False] * len(bits)
    for i in model.locked_indices(compulsory):
        bits[i] = 0
        locked[i] = True

    rules = model._compiled
    for _ in range(2 * len(bits) + 2):
        changed = False
        for rule in rules:
            if not _rule_holds(rule, bits):
                _fire(rule, bits, locked, policy)
                changed = True
        if not changed:
            return Configuration(tuple(bits))
    raise RuntimeError("repair did not reach a fixpoint")  # unreachable by construction


def _clear_and_lock(idx: Iterable[int], bits: list[int], locked: list[bool]) -> None:
    for i in idx:
        bits[i] = 0
        locked[i] = True


def _fire(rule: _CompiledRule, bits: list[int], locked: list[bool], policy: str) -> None:
    if rule.kind == "implies_flip":
        if any(locked[i] for i in rule.consequent):
            _clear_and_lock([i for i in rule.antecedent if bits[i]], bits, locked)
        else:
            for i in rule.consequent:
                bits[i] = 1
    elif rule.kind == "all_equal":
        if any(locked[i] for i in rule.group):
            _clear_and_lock(rule.group, bits, locked)
        else:
            for i in rule.group:
                bits[i] = 1
    else:
        if policy == "activate_all_reset" and not any(locked[i] for i in rule.group):
            group = set(rule.group)
            for i in rule.group:
                bits[i] = 1
            _clear_and_lock([i for i in range(len(bits)) if i not in group], bits, locked)
        else:
            _clear_and_lock(rule.group, bits, locked)


def random_valid(
    model: FeatureModel,
    compulsory: Iterable[int] = (),
    rng_seed: int | np.random.Generator | None = 0,
    rom_policy: str | None = None,
) -> Configuration:
    """Draw each free bit uniformly, then repair the result."""
    rng = np.random.default_rng(rng_seed)
    compulsory = tuple(compulsory)
    bits = rng.integers(0, 2, size=model.n_features).tolist()
    for i in model.indices(compulsory):
        bits[i] = 0
    return repair(Configuration(tuple(bits)), model, compulsory, rom_policy)
