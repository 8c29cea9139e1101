"""Shared fixtures and brute-force oracles for the test suite."""

from __future__ import annotations

import itertools
import threading

import numpy as np

from minishrink.devices import Device
from minishrink.evaluation import CostModel, SimulatedEvaluator
from minishrink.feature_model import AppSpec, Configuration, Feature, FeatureModel
from minishrink.search import MiniaturizationProblem

SYNTH_BITS = 12
SYNTH_OBJECTIVES = ("cs", "mu")


def synthetic_model(n_bits: int = SYNTH_BITS) -> FeatureModel:
    feats = tuple(Feature(i + 1, f"F{i + 1}", False, True) for i in range(n_bits))
    return FeatureModel(feats, name="synthetic")


def synthetic_costs(n_bits: int = SYNTH_BITS, seed: int = 2024) -> CostModel:
    rng = np.random.default_rng(seed)
    deltas = {
        i + 1: tuple(float(x) for x in np.round(rng.uniform(-30, 25, 3), 2)) for i in range(n_bits)
    }
    return CostModel(500.0, deltas)


SYNTH_APP = AppSpec("synthetic", frozenset(), 100.0, 1.0)
SYNTH_DEVICES = [Device("d", 100, 500, 1)]


class CountingEvaluator(SimulatedEvaluator):
    """Simulated evaluator that records every configuration it measures."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._lock = threading.Lock()
        self.seen: list[str] = []

    def measure(self, config, app):
        with self._lock:
            self.seen.append(config.bitstring)
        return super().measure(config, app)


def synthetic_problem(n_jobs: int = 1, evaluator=None) -> MiniaturizationProblem:
    model = synthetic_model()
    ev = evaluator or CountingEvaluator(model, synthetic_costs())
    return MiniaturizationProblem(model, SYNTH_APP, SYNTH_DEVICES, ev, n_jobs=n_jobs)


def naive_front(points) -> set[int]:
    """Indices of points no other point dominates, by pairwise comparison."""
    pts = [tuple(p) for p in points]

    def dom(a, b):
        return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))

    return {i for i, p in enumerate(pts) if not any(dom(q, p) for q in pts)}


def naive_sort(points) -> list[list[int]]:
    remaining = list(range(len(points)))
    fronts = []
    while remaining:
        sub = [points[i] for i in remaining]
        keep = naive_front(sub)
        front = sorted(remaining[j] for j in keep)
        fronts.append(front)
        remaining = [i for i in remaining if i not in set(front)]
    return fronts


def brute_force_front(objectives=SYNTH_OBJECTIVES) -> set[str]:
    """Bitstrings of every Pareto-optimal configuration of the synthetic problem."""
    model = synthetic_model()
    ev = SimulatedEvaluator(model, synthetic_costs())
    configs = [Configuration(bits) for bits in itertools.product((0, 1), repeat=SYNTH_BITS)]
    lookup = {"cs": "code_size_kb", "mu": "memory_kb", "et": "time_s"}
    pts = []
    for c in configs:
        m = ev.measure(c, SYNTH_APP)
        pts.append(tuple(getattr(m, lookup[o]) for o in objectives))
    return {configs[i].bitstring for i in naive_front_fast(pts)}


def naive_front_fast(points) -> list[int]:
    # vectorized pairwise check; still O(n^2), independent of the library's sort
    arr = np.asarray(points, dtype=float)
    out = []
    for i, p in enumerate(arr):
        le = (arr <= p).all(axis=1)
        lt = (arr < p).any(axis=1)
        if not (le & lt).any():
            out.append(i)
    return out


def flip(model: FeatureModel, *ids: int) -> Configuration:
    """Configuration with exactly the given feature ids flipped."""
    bits = [0] * model.n_features
    for i in ids:
        bits[model.index_of[i]] = 1
    return Configuration(tuple(bits))
