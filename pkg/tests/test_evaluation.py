import statistics
import sys
import textwrap
import threading
import time

import pytest

from minishrink.evaluation import (
    CallableEvaluator,
    EvaluationCache,
    EvaluatorError,
    ExternalEvaluator,
    SimulatedEvaluator,
    config_lines,
    evaluate,
    external_evaluate,
    parse_benchmark_output,
    percentage_change,
    simulated_evaluate,
)
from minishrink.devices import Measurement
from minishrink.feature_model import AppSpec, Configuration, repair

from _support import flip


# -- percentage change ---------------------------------------------------------------------


def test_percentage_change_examples():
    assert round(percentage_change(490.824, 555.896), 2) == -11.71
    assert percentage_change(3.5, 3.5) == 0
    assert round(percentage_change(12.656, 104.816), 2) == -87.93
    with pytest.raises(ZeroDivisionError):
        percentage_change(1, 0)


# -- simulated evaluator ---------------------------------------------------------------------


def test_baseline_is_app_baseline(duktape, costs, cube):
    m = simulated_evaluate(Configuration.zeros(86), cube, costs, duktape)
    assert (m.code_size_kb, m.memory_kb, m.time_s) == (570.0, 166.496, 0.205)


def test_rom_group_delta(duktape, costs):
    app = AppSpec("t", frozenset(), 104.816, 1.0)
    m = simulated_evaluate(flip(duktape, 7, 8, 9, 10), app, costs, duktape)
    assert m.memory_kb == pytest.approx(104.816 * (1 - 0.8793), abs=1e-9)
    assert m.memory_kb == pytest.approx(12.653, abs=2e-3)
    assert m.code_size_kb == pytest.approx(570 * 1.2521)


def test_single_feature_product(duktape, costs, cube):
    m = simulated_evaluate(flip(duktape, 3), cube, costs, duktape)
    assert m.code_size_kb == pytest.approx(503.253, abs=1e-3)
    assert m.time_s == pytest.approx(0.205 * 1.0915)
    m = simulated_evaluate(flip(duktape, 3, 84), cube, costs, duktape)
    assert m.code_size_kb == pytest.approx(570 * 0.8829 * 1.0667, rel=1e-12)
    assert m.time_s == pytest.approx(0.205 * 1.0915 * (1 - 0.2317), rel=1e-12)


def test_group_delta_replaces_members(duktape, costs, cube):
    m = simulated_evaluate(flip(duktape, 26, 27), cube, costs, duktape)
    assert m.code_size_kb == pytest.approx(570 * (1 - 0.0335))
    assert m.memory_kb == pytest.approx(166.496 * (1 - 0.0063))


def test_invalid_config_is_infeasible(duktape, costs, cube):
    assert not simulated_evaluate(flip(duktape, 26), cube, costs, duktape).feasible
    # compulsory feature flipped
    assert not simulated_evaluate(flip(duktape, 15), cube, costs, duktape).feasible
    m = simulated_evaluate(flip(duktape, 26), cube, costs, duktape, check_validity=False)
    assert m.feasible


def test_noise_is_deterministic(duktape, costs, cube):
    noisy = costs.with_noise(0.05)
    c = flip(duktape, 3)
    a = simulated_evaluate(c, cube, noisy, duktape, rng_seed=1)
    b = simulated_evaluate(c, cube, noisy, duktape, rng_seed=1)
    assert a == b
    assert a != simulated_evaluate(c, cube, noisy, duktape, rng_seed=2)
    assert a.code_size_kb == simulated_evaluate(c, cube, costs, duktape).code_size_kb


def test_negative_mu_features_never_raise_mu(duktape, costs, cube):
    negatives = [fid for fid, d in costs.feature_deltas.items() if d[1] < 0]
    base = simulated_evaluate(Configuration.zeros(86), cube, costs, duktape).memory_kb
    for fid in negatives:
        c = flip(duktape, fid)
        if repair(c, duktape, cube.compulsory_ids) != c:
            continue
        assert simulated_evaluate(c, cube, costs, duktape).memory_kb <= base


# -- memoization --------------------------------------------------------------------------


class Counter:
    def __init__(self, delay=0.0):
        self.calls = 0
        self.delay = delay
        self.lock = threading.Lock()

    def __call__(self, config, app):
        with self.lock:
            self.calls += 1
        time.sleep(self.delay)
        return Measurement(500.0, 100.0, 1.0)


def test_same_config_evaluated_once(duktape, devices5, cube):
    fn = Counter()
    ev = CallableEvaluator(fn)
    c = flip(duktape, 3)
    r1 = evaluate(c, cube, duktape, devices5, ev)
    r2 = evaluate(c, cube, duktape, devices5, ev)
    assert fn.calls == 1
    assert (r1.evaluator_calls, r2.evaluator_calls) == (1, 0)
    assert r1.objectives == r2.objectives
    assert ev.cache.hits == 1


def test_single_flight(duktape, devices5, cube):
    fn = Counter(delay=0.2)
    ev = CallableEvaluator(fn)
    c = flip(duktape, 3)
    results = []
    threads = [
        threading.Thread(target=lambda: results.append(evaluate(c, cube, duktape, devices5, ev)))
        for _ in range(8)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert fn.calls == 1
    assert sum(r.evaluator_calls for r in results) == 1
    assert len({r.measurement for r in results}) == 1


def test_failed_compute_is_not_cached():
    cache = EvaluationCache()
    with pytest.raises(RuntimeError):
        cache.get_or_compute(("a", "0"), lambda: (_ for _ in ()).throw(RuntimeError("boom")))
    m, computed = cache.get_or_compute(("a", "0"), lambda: Measurement(1, 1, 1))
    assert computed and m == Measurement(1, 1, 1)


def test_infeasible_record(duktape, devices5, cube):
    ev = CallableEvaluator(lambda c, a: Measurement.infeasible())
    r = evaluate(flip(duktape, 3), cube, duktape, devices5, ev)
    assert not r.feasible and r.objectives is None


def test_record_objectives(duktape, costs, devices5, cube):
    ev = SimulatedEvaluator(duktape, costs)
    r = evaluate(Configuration.zeros(86), cube, duktape, devices5, ev)
    assert r.objectives.code_size_kb == 570.0
    assert r.objectives.as_tuple(("cs", "mu")) == (570.0, 166.496)


def test_cache_file_persists(tmp_path, duktape, costs, cube):
    path = tmp_path / "cache.csv"
    ev = SimulatedEvaluator(duktape, costs, cache=EvaluationCache(path))
    c = flip(duktape, 3)
    m = ev.cache.get_or_compute((cube.name, c.bitstring), lambda: ev.measure(c, cube))[0]
    ev.cache.get_or_compute(("x", "0"), Measurement.infeasible)
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[:3] == ["3d-cube", c.bitstring, "1"]
    assert lines[1] == "x,0,0,,,"

    reloaded = EvaluationCache(path)
    assert len(reloaded) == 2
    again, computed = reloaded.get_or_compute((cube.name, c.bitstring), lambda: pytest.fail("recomputed"))
    assert not computed and again == m
    assert not reloaded.get_or_compute(("x", "0"), lambda: pytest.fail("recomputed"))[0].feasible


# -- external evaluator ------------------------------------------------------------------


def script(tmp_path, body, name="bench.py"):
    path = tmp_path / name
    path.write_text("import sys\n" + textwrap.dedent(body))
    return [sys.executable, str(path)]


def test_config_file_lines(duktape):
    lines = config_lines(flip(duktape, 2, 4), duktape)
    assert lines == ["DUK_USE_FATAL_MAXLEN:64", "DUK_USE_LEXER_SLIDING_WINDOW:FALSE"]


def test_external_median_of_runs(tmp_path, duktape, cube):
    ets = [0.71, 0.9, 0.65, 0.8, 0.7, 0.75, 0.69, 0.72, 0.95, 0.6]
    cmd = script(tmp_path, f"""
        cfg, app, runs = sys.argv[1:]
        assert app == "3d-cube" and runs == "10"
        for et in {ets!r}:
            print("583,000 104816", et)
    """)
    m = external_evaluate(Configuration.zeros(86), cube, duktape, cmd, runs=10)
    assert m.code_size_kb == 583.0
    assert m.memory_kb == 104.816
    assert m.time_s == statistics.median(ets)


def test_external_receives_config(tmp_path, duktape, cube):
    cmd = script(tmp_path, """
        text = open(sys.argv[1]).read()
        assert text.strip() == "DUK_USE_EXEC_PREFER_SIZE:TRUE", text
        print("1000 2000 0.5")
    """)
    m = external_evaluate(flip(duktape, 3), cube, duktape, cmd, runs=1)
    assert (m.code_size_kb, m.memory_kb, m.time_s) == (1.0, 2.0, 0.5)


def test_external_build_failure(tmp_path, duktape, cube):
    cmd = script(tmp_path, "sys.exit(2)\n")
    assert not external_evaluate(Configuration.zeros(86), cube, duktape, cmd).feasible


def test_external_errors(tmp_path, duktape, cube):
    zero = Configuration.zeros(86)
    with pytest.raises(EvaluatorError, match="status 1"):
        external_evaluate(zero, cube, duktape, script(tmp_path, "sys.exit(1)\n"))
    with pytest.raises(EvaluatorError, match="unparseable"):
        external_evaluate(zero, cube, duktape, script(tmp_path, "print('oops')\n"), runs=1)
    with pytest.raises(EvaluatorError, match="expected 3"):
        external_evaluate(zero, cube, duktape, script(tmp_path, "print('1 2 3')\n"), runs=3)
    with pytest.raises(EvaluatorError, match="timed out"):
        external_evaluate(zero, cube, duktape, script(tmp_path, "import time; time.sleep(5)\n"), timeout=0.5)
    with pytest.raises(EvaluatorError):
        external_evaluate(zero, cube, duktape, [str(tmp_path / "nope")])


def test_external_evaluator_class(tmp_path, duktape, devices5, cube):
    cmd = script(tmp_path, "print('570000 166496 0.205')\n")
    ev = ExternalEvaluator(duktape, cmd, runs=1)
    r = evaluate(Configuration.zeros(86), cube, duktape, devices5, ev)
    assert r.measurement == Measurement(570.0, 166.496, 0.205)


def test_parse_benchmark_output():
    m = parse_benchmark_output("10 20 1\n\n30 40 3\n50 60 2\n", 3)
    assert (m.code_size_kb, m.memory_kb, m.time_s) == (0.01, 0.04, 2.0)
