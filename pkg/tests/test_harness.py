"""Experiment harness: metrics, merging, and output files."""

import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from modcs.harness import (
    BENCHMARK_PANELS,
    NOISE_C_DEFAULT,
    PANEL_ALGORITHMS,
    ExperimentSpec,
    benchmark_spec,
    build_system,
    merge_results,
    run_experiment,
    trial_seed,
    write_outputs,
)
from modcs.recovery import RecoveryConfig
from modcs.sensing import uniform_noise_rms
from modcs.signal_model import ModelParams, init_state, signal, step


def small_spec(**over):
    base = dict(
        model=ModelParams(m=30, s0=5, sa=1, d=3, r=1.0, seed=0),
        n=15,
        noise_c=0.05,
        algorithms=(
            RecoveryConfig(algorithm="modcs", alpha=0.45),
            RecoveryConfig(algorithm="modcs-add-ls-del",
                           alpha_add=0.1, alpha_del=0.5),
        ),
        horizon=4,
        trials=3,
    )
    base.update(over)
    return ExperimentSpec(**base)


@pytest.fixture(scope="module")
def small_result():
    return run_experiment(small_spec())


# ---------------------------------------------------------------------------
# spec and system construction
# ---------------------------------------------------------------------------


def test_spec_validation():
    with pytest.raises(ValueError):
        small_spec(trials=0)
    with pytest.raises(ValueError):
        small_spec(horizon=0)
    with pytest.raises(ValueError):
        small_spec(algorithms=())
    with pytest.raises(ValueError):
        small_spec(algorithms=(RecoveryConfig(algorithm="modcs", alpha=0.4),
                               RecoveryConfig(algorithm="modcs", alpha=0.5)))
    with pytest.raises(ValueError):
        small_spec(n=30)  # n must stay below m
    with pytest.raises(ValueError):
        small_spec(n0=10)  # taller matrix cannot be shorter than A
    with pytest.raises(ValueError):
        small_spec(noise_c=None)  # and no explicit epsilon either


def test_trial_seeds_distinct():
    seeds = [trial_seed(0, i) for i in range(50)]
    assert len(set(seeds)) == 50
    assert trial_seed(1, 0) != trial_seed(0, 0)


def test_build_system_shapes():
    spec = small_spec()
    system = build_system(spec)
    assert system.A.shape == (15, 30)
    assert system.A0 is None
    assert system.epsilon == pytest.approx(0.05 * math.sqrt(15))
    tall = build_system(small_spec(n0=25))
    assert tall.A0.shape == (25, 30)
    assert not np.array_equal(tall.A0[:15], tall.A)


# ---------------------------------------------------------------------------
# metric content
# ---------------------------------------------------------------------------


def test_noise_free_experiment_has_zero_error():
    spec = small_spec(noise_c=None, epsilon=0.0, trials=2,
                      solver_opt_tol=1e-9, solver_max_iters=60000)
    result = run_experiment(spec)
    for series in result.series().nmse.values():
        assert np.all(series <= 1e-10)


def test_series_shapes_and_bounds(small_result):
    series = small_result.series()
    assert series.algorithms == ["modcs", "modcs-add-ls-del"]
    assert np.array_equal(series.t, np.arange(1, 5))
    for table in (series.nmse, series.misses_norm, series.extras_norm):
        for curve in table.values():
            assert curve.shape == (4,)
            assert np.all(curve >= 0.0)
            assert np.all(np.isfinite(curve))
    for curve in series.misses_norm.values():
        assert np.all(curve <= 1.0)  # cannot miss more than the support


def test_support_size_matches_model(small_result):
    spec = small_result.spec
    for i in range(spec.trials):
        params = replace(spec.model, seed=trial_seed(spec.master_seed, i))
        state = init_state(params)
        for j in range(spec.horizon):
            state = step(state)
            assert small_result.support_size[i, j] == signal(state).support.size


def test_unconverged_solves_are_flagged():
    spec = small_spec(trials=1, horizon=2, solver_max_iters=2)
    result = run_experiment(spec)
    m = result.metrics["modcs"]
    assert np.all(m.unconverged_steps)
    assert np.all(m.solver_iterations <= 2)


# ---------------------------------------------------------------------------
# merging
# ---------------------------------------------------------------------------


def test_merge_matches_single_run(small_result):
    first = run_experiment(small_spec(trials=2))
    second = run_experiment(small_spec(trials=1, trial_offset=2))
    merged = merge_results(first, second)
    assert merged.spec.trials == 3
    assert merged.spec.trial_offset == 0
    assert merged.trial_seeds == small_result.trial_seeds
    assert np.array_equal(merged.support_size, small_result.support_size)
    for alg, m in merged.metrics.items():
        ref = small_result.metrics[alg]
        assert np.array_equal(m.err_sq, ref.err_sq)
        assert np.array_equal(m.misses, ref.misses)
        assert np.array_equal(m.extras_add, ref.extras_add)
        assert np.array_equal(m.solver_iterations, ref.solver_iterations)


def test_merge_is_associative():
    a = run_experiment(small_spec(trials=1))
    b = run_experiment(small_spec(trials=1, trial_offset=1))
    c = run_experiment(small_spec(trials=1, trial_offset=2))
    left = merge_results(merge_results(a, b), c)
    right = merge_results(a, merge_results(b, c))
    assert left.spec == right.spec
    assert left.trial_seeds == right.trial_seeds
    for alg in left.metrics:
        assert np.array_equal(left.metrics[alg].err_sq,
                              right.metrics[alg].err_sq)


def test_merge_validation():
    a = run_experiment(small_spec(trials=1))
    b = run_experiment(small_spec(trials=1, trial_offset=2))  # gap
    with pytest.raises(ValueError):
        merge_results(a, b)
    c = run_experiment(small_spec(trials=1, trial_offset=1, noise_c=0.1))
    with pytest.raises(ValueError):
        merge_results(a, c)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def test_metrics_csv_is_deterministic(tmp_path):
    out1 = write_outputs(run_experiment(small_spec()), tmp_path / "run1")
    out2 = write_outputs(run_experiment(small_spec()), tmp_path / "run2")
    csv1 = (tmp_path / "run1" / "metrics.csv").read_bytes()
    csv2 = (tmp_path / "run2" / "metrics.csv").read_bytes()
    assert csv1 == csv2
    assert len(out1["files"]) == len(out2["files"]) == 5


def test_plot_data_shapes(small_result, tmp_path):
    write_outputs(small_result, tmp_path)
    for fname in ("nmse.csv", "misses.csv", "extras.csv"):
        with (tmp_path / fname).open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "modcs", "modcs-add-ls-del"]
        assert len(rows) == 1 + small_result.spec.horizon
        assert all(len(r) == 3 for r in rows)
        assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4"]


def test_manifest_records_everything(small_result, tmp_path):
    out = write_outputs(small_result, tmp_path)
    manifest = json.loads(out["manifest"].read_text())
    assert manifest["spec"]["model"]["m"] == 30
    assert manifest["spec"]["trials"] == 3
    assert [a["algorithm"] for a in manifest["spec"]["algorithms"]] == [
        "modcs", "modcs-add-ls-del"]
    assert len(manifest["trial_seeds"]) == 3
    assert manifest["trial_seeds"] == [trial_seed(0, i) for i in range(3)]
    assert set(manifest["failed_step_counts"]) == {"modcs", "modcs-add-ls-del"}
    assert "numpy_version" in manifest and "package_version" in manifest
    for f in manifest["files"]:
        assert (tmp_path / f.split("/")[-1]).exists()


def test_series_recomputable_from_diagnostics(small_result, tmp_path):
    write_outputs(small_result, tmp_path)
    err2 = {}
    sig2 = {}
    miss = {}
    supp = {}
    with (tmp_path / "diagnostics.csv").open() as fh:
        for row in csv.DictReader(fh):
            key = (row["algorithm"], int(row["t"]))
            err2[key] = err2.get(key, 0.0) + float(row["err"]) ** 2
            sig2[key] = sig2.get(key, 0.0) + float(row["signal_norm"]) ** 2
            miss[key] = miss.get(key, 0) + int(row["miss"])
            if row["algorithm"] == "modcs":
                supp[int(row["t"])] = (supp.get(int(row["t"]), 0)
                                       + int(row["support_size"]))
    series = small_result.series()
    for alg in ("modcs", "modcs-add-ls-del"):
        for j, t in enumerate(series.t):
            t = int(t)
            assert series.nmse[alg][j] == pytest.approx(
                err2[alg, t] / sig2[alg, t], rel=1e-7)
            assert series.misses_norm[alg][j] == pytest.approx(
                miss[alg, t] / supp[t], rel=1e-12)


# ---------------------------------------------------------------------------
# benchmark panels
# ---------------------------------------------------------------------------


def test_benchmark_panels_table():
    assert set(BENCHMARK_PANELS) == {"a", "b", "c", "d"}
    assert BENCHMARK_PANELS["a"]["n"] == 65
    assert BENCHMARK_PANELS["b"]["n"] == 59
    assert BENCHMARK_PANELS["c"]["r"] == pytest.approx(2.0 / 3.0)
    assert BENCHMARK_PANELS["d"] == {"n": 59, "r": 0.4, "d": 5}


def test_benchmark_spec_wiring():
    spec = benchmark_spec("c", trials=2, horizon=5)
    assert spec.model.m == 200 and spec.model.s0 == 20 and spec.model.sa == 2
    assert spec.model.r == pytest.approx(2.0 / 3.0)
    assert spec.n == 59
    assert spec.noise_c == NOISE_C_DEFAULT
    assert tuple(c.algorithm for c in spec.algorithms) == PANEL_ALGORITHMS
    ald = next(c for c in spec.algorithms
               if c.algorithm == "modcs-add-ls-del")
    assert ald.alpha_add == pytest.approx(NOISE_C_DEFAULT / 2.0)
    assert ald.alpha_del == pytest.approx(1.0 / 3.0)
    modcs = next(c for c in spec.algorithms if c.algorithm == "modcs")
    assert modcs.alpha == pytest.approx(
        (NOISE_C_DEFAULT / 2.0 + 1.0 / 3.0) / 2.0)
    # every algorithm solves with the ball at the rms noise norm, not the
    # worst case
    rms = uniform_noise_rms(NOISE_C_DEFAULT, 59)
    assert rms < NOISE_C_DEFAULT * math.sqrt(59)
    for cfg in spec.algorithms:
        assert cfg.epsilon == pytest.approx(rms)
    with pytest.raises(ValueError):
        benchmark_spec("z")
    with pytest.raises(ValueError):
        benchmark_spec("a", algorithms=("nope",))


def test_benchmark_subset_of_algorithms():
    spec = benchmark_spec("a", trials=1, horizon=2,
                          algorithms=("modcs", "simple-cs"))
    assert [c.algorithm for c in spec.algorithms] == ["modcs", "simple-cs"]
