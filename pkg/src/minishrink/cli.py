"""Command-line entry point: ``minishrink optimize | bench | compare``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import statistics
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import datasets
from .devices import Device, load_devices
from .evaluation import (
    CostModel,
    EvaluationCache,
    Evaluator,
    EvaluatorError,
    ExternalEvaluator,
    SimulatedEvaluator,
    load_cost_model,
    percentage_change,
)
from .feature_model import AppSpec, Configuration, FeatureModel, FeatureModelError, load_feature_model
from .indicators import cliffs_delta, hypervolume, mann_whitney_u, normalization_bounds, normalize, pfs_contribution
from .report import RunReport
from .search import OBJECTIVE_NAMES, MiniaturizationProblem, make_search

logger = logging.getLogger("minishrink")

EXIT_OK = 0
EXIT_EVALUATOR = 1
EXIT_INPUT = 3
CACHE_ENV = "MINISHRINK_CACHE"


class InputError(Exception):
    """Bad command-line inputs (missing or malformed files, bad flags)."""


@dataclass
class Inputs:
    model: FeatureModel
    devices: list[Device]
    cost_model: CostModel | None


def _load(kind: str, path, loader):
    if path is not None and not Path(path).exists():
        raise InputError(f"{kind} file not found: {path}")
    try:
        return loader(path)
    except (OSError, ValueError, FeatureModelError, KeyError) as exc:
        raise InputError(f"cannot load {kind} file {path}: {exc}") from exc


def load_inputs(args) -> Inputs:
    model = _load("feature model", args.model, lambda p: load_feature_model(p or datasets.data_path(datasets.FEATURE_MODEL)))
    if getattr(args, "rom_policy", None):
        model = model.with_rom_policy(args.rom_policy)
    devices = []
    if hasattr(args, "devices"):
        devices = _load("device", args.devices, lambda p: load_devices(p or datasets.data_path(datasets.DEVICES)))
        if not devices:
            raise InputError("device file lists no devices")
    cost_model = None
    if args.evaluator == "simulated":
        cost_model = _load(
            "cost model",
            args.cost_model,
            lambda p: load_cost_model(p or datasets.data_path(datasets.COST_MODEL), model),
        )
        if args.noise is not None:
            cost_model = cost_model.with_noise(args.noise)
    return Inputs(model, devices, cost_model)


def load_app(arg: str, model: FeatureModel) -> AppSpec:
    try:
        return datasets.resolve_app(arg, model)
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    except (ValueError, FeatureModelError) as exc:
        raise InputError(f"cannot load app spec {arg}: {exc}") from exc


def make_evaluator(spec: str, inputs: Inputs, seed: int, runs: int, timeout: float,
                   cache_path=None, check_validity: bool = True) -> Evaluator:
    cache = EvaluationCache(cache_path) if cache_path else None
    if spec == "simulated":
        return SimulatedEvaluator(inputs.model, inputs.cost_model, seed=seed,
                                  check_validity=check_validity, cache=cache)
    if spec.startswith("external:") and spec[len("external:"):].strip():
        return ExternalEvaluator(inputs.model, spec[len("external:"):], runs=runs, timeout=timeout, cache=cache)
    raise InputError(f"evaluator must be 'simulated' or 'external:CMD', got {spec!r}")


def _cache_path(args):
    return args.cache or os.environ.get(CACHE_ENV) or None


def _objectives(text: str) -> tuple[str, ...]:
    objs = tuple(o.strip().lower() for o in text.split(",") if o.strip())
    bad = [o for o in objs if o not in OBJECTIVE_NAMES]
    if bad or not objs:
        raise InputError(f"--objectives must be a comma list drawn from {','.join(OBJECTIVE_NAMES)}")
    return objs


# -- optimize ------------------------------------------------------------------------------


def run_optimize(args) -> RunReport:
    inputs = load_inputs(args)
    app = load_app(args.app, inputs.model)
    evaluator = make_evaluator(args.evaluator, inputs, args.seed, args.runs, args.timeout, _cache_path(args))
    problem = MiniaturizationProblem(inputs.model, app, inputs.devices, evaluator,
                                     usr_orientation=args.usr_orientation, n_jobs=args.parallel)
    params = dict(
        budget=args.budget,
        population=args.population,
        crossover_prob=args.crossover_prob,
        mutation_prob=args.mutation_prob,
        seed=args.seed,
        objectives=_objectives(args.objectives),
    )
    if args.algo == "sway":
        params["pool_size"] = args.pool_size
    try:
        search = make_search(args.algo, **params)
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    start = time.perf_counter()
    try:
        search.fit(problem)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    wall = time.perf_counter() - start

    baseline = evaluator.measure(Configuration.zeros(inputs.model.n_features), app)
    report = RunReport(
        app=app.name,
        algorithm=args.algo,
        seed=args.seed,
        archive=search.archive_,
        baseline=baseline,
        devices=inputs.devices,
        model=inputs.model,
        evaluator=args.evaluator,
        params={k: (list(v) if isinstance(v, tuple) else v) for k, v in search.get_params().items()},
        wall_time_s=wall,
    )
    report.write(args.out, include_timing=args.timing)
    return report


# -- bench ----------------------------------------------------------------------------------


BENCH_FIELDS = ["id", "value", "cs_kb", "mu_kb", "et_s", "delta_cs", "delta_mu", "delta_et", "status"]


def _value_text(values) -> str:
    texts = {("TRUE" if v else "FALSE") if isinstance(v, bool) else str(v) for v in values}
    return texts.pop() if len(texts) == 1 else "vary"


def bench_units(model: FeatureModel) -> list[tuple[str, list[int]]]:
    """Single features in model order, then every dependency group."""
    units = [(str(f.id), [f.id]) for f in model.features]
    for rule in sorted(model.rules, key=lambda r: r.rule_id):
        units.append(("_".join(str(i) for i in rule.member_ids), list(rule.member_ids)))
    return units


def run_bench(model: FeatureModel, app: AppSpec, evaluator: Evaluator) -> list[dict]:
    """Flip each feature (and each dependency group) alone on top of the defaults.

    Rows whose build fails are kept and marked ``skipped``.
    """
    n = model.n_features
    base = evaluator.measure(Configuration.zeros(n), app)
    if not base.feasible:
        raise EvaluatorError("the default configuration failed to build")
    rows = []
    for label, ids in bench_units(model):
        bits = [0] * n
        for fid in ids:
            bits[model.index_of[fid]] = 1
        m = evaluator.measure(Configuration(tuple(bits)), app)
        value = _value_text(model.feature_by_id[i].modified_value for i in ids)
        if not m.feasible:
            rows.append({"id": label, "value": value, "status": "skipped"})
            continue
        rows.append({
            "id": label,
            "value": value,
            "cs_kb": m.code_size_kb,
            "mu_kb": m.memory_kb,
            "et_s": m.time_s,
            "delta_cs": percentage_change(m.code_size_kb, base.code_size_kb),
            "delta_mu": percentage_change(m.memory_kb, base.memory_kb),
            "delta_et": percentage_change(m.time_s, base.time_s),
            "status": "ok",
        })
    return rows


def bench_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n", restval="")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (round(v, 6) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def cmd_bench(args) -> int:
    inputs = load_inputs(args)
    app = load_app(args.app, inputs.model)
    evaluator = make_evaluator(args.evaluator, inputs, args.seed, args.runs, args.timeout, check_validity=False)
    text = bench_csv(run_bench(inputs.model, app, evaluator))
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- compare --------------------------------------------------------------------------------


def _labels(algos: Sequence[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for a in algos:
        seen[a] = seen.get(a, 0) + 1
        out.append(a if seen[a] == 1 else f"{a}#{seen[a]}")
    return out


def run_compare(inputs: Inputs, apps: Sequence[AppSpec], algos: Sequence[str], runs: int,
                seed: int, evaluator_factory, search_params: dict, usr_orientation: str = "as_written",
                n_jobs: int = 1) -> dict:
    """Run every algorithm ``runs`` times per app and compute HV, PFS and statistics.

    Run ``r`` of every algorithm uses seed ``seed + r``. HV is measured after
    normalizing by the ideal/nadir of the combined non-dominated set of all
    runs of all algorithms for that app, against the reference point of ones.
    """
    labels = _labels(algos)
    hv_rows, summary_rows, timing_rows = [], [], []
    for app in apps:
        evaluator = evaluator_factory()
        problem = MiniaturizationProblem(inputs.model, app, inputs.devices, evaluator,
                                         usr_orientation=usr_orientation, n_jobs=n_jobs)
        fronts: dict[str, list[list[tuple]]] = {}
        times: dict[str, list[float]] = {}
        for label, algo in zip(labels, algos):
            fronts[label], times[label] = [], []
            for r in range(runs):
                search = make_search(algo, **{**search_params, "seed": seed + r})
                start = time.perf_counter()
                search.fit(problem)
                times[label].append(time.perf_counter() - start)
                fronts[label].append(search.archive_.points())
        all_fronts = [f for fs in fronts.values() for f in fs if f]
        ideal, nadir = normalization_bounds(all_fronts) if all_fronts else (None, None)
        hv: dict[str, list[float]] = {}
        for label in labels:
            hv[label] = []
            for r, front in enumerate(fronts[label]):
                value = 0.0
                if front:
                    norm = normalize(front, ideal, nadir)
                    value = hypervolume(norm.points, [1.0] * len(ideal))
                hv[label].append(value)
                hv_rows.append({"app": app.name, "algorithm": label, "run": r, "hv": value})
        pfs = pfs_contribution({label: [p for f in fronts[label] for p in f] for label in labels})
        ref = labels[0]
        for label in labels:
            count, pct = pfs[label]
            row = {"app": app.name, "algorithm": label, "pfs_count": count, "pfs_pct": pct,
                   "u_p_value": "", "cliffs_delta": "", "magnitude": ""}
            if label != ref:
                _, p = mann_whitney_u(hv[label], hv[ref])
                delta, mag = cliffs_delta(hv[label], hv[ref])
                row.update(u_p_value=p, cliffs_delta=delta, magnitude=mag)
            summary_rows.append(row)
            timing_rows.append({"app": app.name, "algorithm": label,
                                "median_wall_s": statistics.median(times[label])})
    return {"hv": hv_rows, "summary": summary_rows, "timing": timing_rows}


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def cmd_compare(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    if len(algos) < 2:
        raise InputError("--algos needs at least two algorithms")
    inputs = load_inputs(args)
    apps = [load_app(a, inputs.model) for a in args.app]
    search_params = dict(
        budget=args.budget,
        population=args.population,
        crossover_prob=args.crossover_prob,
        mutation_prob=args.mutation_prob,
        objectives=_objectives(args.objectives),
        pool_size=args.pool_size,
    )
    try:
        for a in set(algos):
            make_search(a, seed=args.seed, **search_params)._params()
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    def factory():
        return make_evaluator(args.evaluator, inputs, args.seed, args.runs, args.timeout, _cache_path(args))

    result = run_compare(inputs, apps, algos, args.repeats, args.seed, factory, search_params,
                         args.usr_orientation, args.parallel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "hv.csv", result["hv"], ["app", "algorithm", "run", "hv"])
    _write_csv(out / "summary.csv", result["summary"],
               ["app", "algorithm", "pfs_count", "pfs_pct", "u_p_value", "cliffs_delta", "magnitude"])
    _write_csv(out / "timing.csv", result["timing"], ["app", "algorithm", "median_wall_s"])
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="feature-model JSON (default: shipped duktape86.json)")
    p.add_argument("--evaluator", default="simulated", help="'simulated' or 'external:CMD'")
    p.add_argument("--cost-model", dest="cost_model", help="cost-model JSON for the simulated evaluator")
    p.add_argument("--noise", type=float, default=None, help="noise sigma for the simulated evaluator")
    p.add_argument("--runs", type=int, default=10, help="benchmark runs per external evaluation")
    p.add_argument("--timeout", type=float, default=600.0, help="seconds per external evaluation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rom-policy", dest="rom_policy", choices=["deactivate", "activate_all_reset"])


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--devices", help="device catalog JSON (default: shipped devices5.json)")
    p.add_argument("--budget", type=int, default=250)
    p.add_argument("--population", type=int, default=10)
    p.add_argument("--cx", dest="crossover_prob", type=float, default=0.8)
    p.add_argument("--mut", dest="mutation_prob", type=float, default=0.1)
    p.add_argument("--objectives", default=",".join(OBJECTIVE_NAMES))
    p.add_argument("--pool-size", dest="pool_size", type=int, default=10_000, help="SWAY candidate pool")
    p.add_argument("--usr-orientation", dest="usr_orientation", default="as_written",
                   choices=["as_written", "slack"])
    p.add_argument("--parallel", type=int, default=1, help="concurrent evaluations")
    p.add_argument("--cache", help=f"persistent evaluation cache file (or ${CACHE_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="minishrink", description="Multi-objective interpreter miniaturization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimize", help="search for miniaturized configurations")
    _common(opt)
    _search_flags(opt)
    opt.add_argument("--app", required=True, help="app-spec JSON or shipped app name")
    opt.add_argument("--algo", default="nsga2", choices=["nsga2", "hybrid-rs", "sway"])
    opt.add_argument("--out", default="minishrink-out")
    opt.add_argument("--timing", action="store_true", help="record wall time in report.json")
    opt.set_defaults(func=lambda a: (run_optimize(a), EXIT_OK)[1])

    bench = sub.add_parser("bench", help="measure each feature flipped alone")
    _common(bench)
    bench.add_argument("--app", required=True)
    bench.add_argument("--out", help="CSV output path (default: stdout)")
    bench.set_defaults(func=cmd_bench)

    cmp_ = sub.add_parser("compare", help="compare algorithms over repeated runs")
    _common(cmp_)
    _search_flags(cmp_)
    cmp_.add_argument("--app", action="append", required=True, help="repeatable")
    cmp_.add_argument("--algos", default="nsga2,hybrid-rs")
    cmp_.add_argument("--repeats", type=int, default=30, help="independent runs per algorithm")
    cmp_.add_argument("--out", default="minishrink-compare")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"minishrink: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EvaluatorError as exc:
        print(f"minishrink: evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR


if __name__ == "__main__":
    sys.exit(main())
