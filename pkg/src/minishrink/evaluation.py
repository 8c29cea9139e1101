"""Turning configurations into measurements.

Two evaluators are provided: a simulated cost model that composes measured
per-feature percentage changes, and an external command that builds and
benchmarks the interpreter. Both sit behind :func:`evaluate`, which memoizes
results per ``(app name, bitstring)``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shlex
import statistics
import subprocess
import tempfile
import threading
from concurrent.futures import Future
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .devices import Device, Measurement, ObjectiveVector, objectives
from .feature_model import AppSpec, Configuration, FeatureModel, is_valid

logger = logging.getLogger(__name__)

BYTES_PER_KB = 1000.0
DEFAULT_TIMEOUT_S = 600.0
BUILD_FAILED_EXIT = 2

Delta = tuple[float, float, float]


class EvaluatorError(RuntimeError):
    """The evaluator itself failed (I/O, timeout, protocol violation).

    Distinct from a build failure, which yields an infeasible measurement.
    """


def percentage_change(new_median: float, base_median: float) -> float:
    if base_median == 0:
        raise ZeroDivisionError("percentage change against a zero baseline")
    return 100.0 * (new_median - base_median) / base_median


# -- cost model -------------------------------------------------------------------


@dataclass(frozen=True)
class CostModel:
    """Percentage changes (code size, memory, time) per feature and per group.

    ``group_deltas`` is keyed by dependency-rule id; a group delta replaces the
    member deltas when every feature the rule mentions is flipped.
    """

    base_code_size_kb: float
    feature_deltas: Mapping[int, Delta]
    group_deltas: Mapping[str, Delta] = field(default_factory=dict)
    group_labels: Mapping[str, str] = field(default_factory=dict)
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def check_against(self, model: FeatureModel) -> None:
        missing = [f.id for f in model.features if f.id not in self.feature_deltas]
        if missing:
            raise ValueError(f"cost model has no delta for feature ids {missing}")
        rule_ids = {r.rule_id for r in model.rules}
        unknown = sorted(set(self.group_deltas) - rule_ids)
        if unknown:
            raise ValueError(f"group deltas reference unknown rules {unknown}")

    def with_noise(self, sigma: float) -> "CostModel":
        return CostModel(
            self.base_code_size_kb, self.feature_deltas, self.group_deltas, self.group_labels, sigma
        )


def cost_model_from_dict(data: Mapping) -> CostModel:
    groups = data.get("group_deltas", {})
    return CostModel(
        base_code_size_kb=float(data["base_code_size_kb"]),
        feature_deltas={int(k): tuple(float(x) for x in v) for k, v in data["feature_deltas"].items()},
        group_deltas={k: tuple(float(x) for x in g["delta"]) for k, g in groups.items()},
        group_labels={k: str(g.get("label", k)) for k, g in groups.items()},
        noise_sigma=float(data.get("noise_sigma", 0.0)),
    )


def load_cost_model(path, model: FeatureModel | None = None) -> CostModel:
    with Path(path).open() as fh:
        cm = cost_model_from_dict(json.load(fh))
    if model is not None:
        cm.check_against(model)
    return cm


def flipped_units(config: Configuration, model: FeatureModel, cost_model: CostModel) -> list[tuple[str, Delta]]:
    """Split the flipped features into units that each contribute one delta.

    Fully flipped groups with a group delta come first (ascending rule id, a
    feature is covered by at most one group); remaining flipped features
    contribute their own delta.
    """
    flipped = set(model.flipped_ids(config))
    covered: set[int] = set()
    units: list[tuple[str, Delta]] = []
    for rule in sorted(model.rules, key=lambda r: r.rule_id):
        delta = cost_model.group_deltas.get(rule.rule_id)
        if delta is None:
            continue
        members = set(rule.member_ids)
        if members <= flipped and not members & covered:
            covered |= members
            units.append((rule.rule_id, delta))
    for fid in sorted(flipped - covered):
        units.append((str(fid), cost_model.feature_deltas.get(fid, (0.0, 0.0, 0.0))))
    return units


def _noise_rng(seed: int, app_name: str, bitstring: str) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}|{app_name}|{bitstring}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def simulated_evaluate(
    config: Configuration,
    app: AppSpec,
    cost_model: CostModel,
    model: FeatureModel,
    rng_seed: int = 0,
    check_validity: bool = True,
) -> Measurement:
    """Desk-scale surrogate for building and benchmarking ``config``.

    Percentage changes compose multiplicatively. Invalid configurations come
    back infeasible, standing in for a compilation failure, unless
    ``check_validity`` is off (single-feature benchmarking does that).
    """
    if check_validity and not is_valid(config, model, app.compulsory_ids):
        return Measurement.infeasible()
    cs, mu, et = cost_model.base_code_size_kb, app.base_memory_kb, app.base_time_s
    for _, (dcs, dmu, det) in flipped_units(config, model, cost_model):
        cs *= 1 + dcs / 100
        mu *= 1 + dmu / 100
        et *= 1 + det / 100
    if cost_model.noise_sigma > 0:
        rng = _noise_rng(rng_seed, app.name, config.bitstring)
        mu *= max(0.01, 1 + rng.normal(0.0, cost_model.noise_sigma))
        et *= max(0.01, 1 + rng.normal(0.0, cost_model.noise_sigma))
    return Measurement(cs, mu, et)


# -- external command -----------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "TRUE" if value else "FALSE"
    return str(value)


def config_lines(config: Configuration, model: FeatureModel) -> list[str]:
    """``NAME:VALUE`` for every flipped feature, in model order."""
    return [
        f"{f.name}:{_format_value(f.modified_value)}"
        for f, b in zip(model.features, config.bits)
        if b
    ]


def write_config_file(config: Configuration, model: FeatureModel, path) -> None:
    lines = config_lines(config, model)
    Path(path).write_text("".join(line + "\n" for line in lines))


def _parse_int(token: str) -> int:
    return int(token.replace(",", "").replace("_", ""))


def parse_benchmark_output(stdout: str, runs: int) -> Measurement:
    """Parse ``CS_BYTES MU_BYTES ET_SECONDS`` lines, one per run.

    Code size comes from the first run; memory and time are medians.
    """
    rows = []
    for line in stdout.splitlines():
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise EvaluatorError(f"unparseable benchmark line: {line!r}")
        try:
            rows.append((_parse_int(parts[0]), _parse_int(parts[1]), float(parts[2])))
        except ValueError:
            raise EvaluatorError(f"unparseable benchmark line: {line!r}") from None
    if len(rows) != runs:
        raise EvaluatorError(f"expected {runs} benchmark lines, got {len(rows)}")
    cs = rows[0][0] / BYTES_PER_KB
    mu = statistics.median(r[1] for r in rows) / BYTES_PER_KB
    et = statistics.median(r[2] for r in rows)
    return Measurement(cs, mu, et)


def external_evaluate(
    config: Configuration,
    app: AppSpec,
    model: FeatureModel,
    command: str | Sequence[str],
    runs: int = 10,
    timeout: float = DEFAULT_TIMEOUT_S,
) -> Measurement:
    """Build and benchmark ``config`` with an external command.

    The command is called as ``command cfg_path app_name runs``. Exit code 0
    means success, 2 means the build failed; anything else is an
    :class:`EvaluatorError`.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    if not argv:
        raise ValueError("empty evaluator command")
    fd, cfg_path = tempfile.mkstemp(prefix="minishrink-", suffix=".cfg")
    os.close(fd)
    try:
        write_config_file(config, model, cfg_path)
        try:
            proc = subprocess.run(
                argv + [cfg_path, app.name, str(runs)],
                capture_output=True,
                text=True,
                timeout=timeout,
            )
        except subprocess.TimeoutExpired:
            raise EvaluatorError(f"evaluator timed out after {timeout:g} s") from None
        except OSError as exc:
            raise EvaluatorError(f"cannot run evaluator {argv[0]!r}: {exc}") from exc
    finally:
        try:
            os.unlink(cfg_path)
        except OSError:
            pass
    if proc.returncode == BUILD_FAILED_EXIT:
        return Measurement.infeasible()
    if proc.returncode != 0:
        stderr = proc.stderr.strip().splitlines()
        tail = stderr[-1] if stderr else ""
        raise EvaluatorError(f"evaluator exited with status {proc.returncode}: {tail}")
    return parse_benchmark_output(proc.stdout, runs)


# -- evaluators and memoization ---------------------------------------------------------


CacheKey = tuple[str, str]


class EvaluationCache:
    """Thread-safe memo table with single-flight semantics.

    Two concurrent requests for the same unseen key run the compute function
    once; the second caller waits for the first. When ``path`` is given,
    existing records are loaded and new ones appended.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._done: dict[CacheKey, Measurement] = {}
        self._pending: dict[CacheKey, Future] = {}
        self.evaluator_calls = 0
        self.hits = 0
        if self.path is not None and self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self._done)

    def __contains__(self, key: CacheKey) -> bool:
        return key in self._done

    def _load(self) -> None:
        with self.path.open(newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                app, bits, feasible, cs, mu, et = row
                if feasible == "1":
                    m = Measurement(float(cs), float(mu), float(et))
                else:
                    m = Measurement.infeasible()
                self._done[(app, bits)] = m

    def _append(self, key: CacheKey, m: Measurement) -> None:
        if self.path is None:
            return
        if m.feasible:
            row = [key[0], key[1], "1", repr(m.code_size_kb), repr(m.memory_kb), repr(m.time_s)]
        else:
            row = [key[0], key[1], "0", "", "", ""]
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", newline="") as fh:
            csv.writer(fh).writerow(row)

    def get_or_compute(self, key: CacheKey, compute: Callable[[], Measurement]) -> tuple[Measurement, bool]:
        """Return ``(measurement, computed_here)``."""
        with self._lock:
            if key in self._done:
                self.hits += 1
                return self._done[key], False
            fut = self._pending.get(key)
            owner = fut is None
            if owner:
                fut = self._pending[key] = Future()
            else:
                self.hits += 1
        if not owner:
            return fut.result(), False
        try:
            value = compute()
        except BaseException as exc:
            with self._lock:
                del self._pending[key]
            fut.set_exception(exc)
            raise
        with self._lock:
            self._done[key] = value
            del self._pending[key]
            self.evaluator_calls += 1
            self._append(key, value)
        fut.set_result(value)
        return value, True


class Evaluator:
    """Base for measurement back-ends; subclasses implement :meth:`measure`."""

    name = "evaluator"

    def __init__(self, cache: EvaluationCache | None = None):
        self.cache = cache if cache is not None else EvaluationCache()

    def measure(self, config: Configuration, app: AppSpec) -> Measurement:
        raise NotImplementedError

    def __call__(self, config: Configuration, app: AppSpec) -> Measurement:
        return self.measure(config, app)


class SimulatedEvaluator(Evaluator):
    name = "simulated"

    def __init__(self, model: FeatureModel, cost_model: CostModel, seed: int = 0,
                 check_validity: bool = True, cache: EvaluationCache | None = None):
        super().__init__(cache)
        self.model = model
        self.cost_model = cost_model
        self.seed = seed
        self.check_validity = check_validity

    def measure(self, config, app):
        return simulated_evaluate(config, app, self.cost_model, self.model, self.seed, self.check_validity)


class ExternalEvaluator(Evaluator):
    name = "external"

    def __init__(self, model: FeatureModel, command: str | Sequence[str], runs: int = 10,
                 timeout: float = DEFAULT_TIMEOUT_S, cache: EvaluationCache | None = None):
        super().__init__(cache)
        self.model = model
        self.command = command
        self.runs = runs
        self.timeout = timeout

    def measure(self, config, app):
        return external_evaluate(config, app, self.model, self.command, self.runs, self.timeout)


class CallableEvaluator(Evaluator):
    """Adapter for a plain ``f(config, app) -> Measurement`` function."""

    def __init__(self, fn: Callable[[Configuration, AppSpec], Measurement],
                 cache: EvaluationCache | None = None):
        super().__init__(cache)
        self.fn = fn

    def measure(self, config, app):
        return self.fn(config, app)


@dataclass(frozen=True)
class EvaluationRecord:
    config: Configuration
    measurement: Measurement
    objectives: ObjectiveVector | None
    evaluator_calls: int = 0

    @property
    def feasible(self) -> bool:
        return self.measurement.feasible


def as_evaluator(evaluator) -> Evaluator:
    if isinstance(evaluator, Evaluator):
        return evaluator
    if callable(evaluator):
        return CallableEvaluator(evaluator)
    raise TypeError(f"not an evaluator: {evaluator!r}")


def evaluate(
    config: Configuration,
    app: AppSpec,
    model: FeatureModel,
    devices: Sequence[Device],
    evaluator: Evaluator,
    usr_orientation: str = "as_written",
) -> EvaluationRecord:
    """Measure ``config`` for ``app``, invoking the evaluator at most once per key.

    ``evaluator_calls`` on the returned record is 1 when this call ran the
    evaluator and 0 when the result came from the cache.
    """
    if len(config) != model.n_features:
        raise ValueError("configuration length does not match the model")
    key = (app.name, config.bitstring)
    m, computed = evaluator.cache.get_or_compute(key, lambda: evaluator.measure(config, app))
    obj = objectives(m, devices, usr_orientation) if m.feasible else None
    return EvaluationRecord(config, m, obj, int(computed))
