"""Monte Carlo harness: run tracking algorithms over many trials and
aggregate support/error metrics.

One experiment = one sensing matrix (drawn once from the master seed, then
fixed) and `trials` independent trajectory/noise realizations, each tracked
by every configured algorithm on identical data.  Per-trial seeds are
derived from the master seed and the absolute trial index, so a 500-trial
run equals two 250-trial runs with trial offsets 0 and 250, merged.

Aggregates per time step (t = 1..horizon; t = 0 is the init step and is
excluded) are ratio-of-means over trials:

* nmse        : sum ||x_t - x_hat_t||^2 / sum ||x_t||^2
* misses_norm : sum |N_t \\ N_hat_t|   / sum |N_t|
* extras_norm : sum |N_hat_t \\ N_t|   / sum |N_t|
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .l1min import SolverOptions
from .recovery import ALGORITHMS, RecoveryConfig, run_sequence
from .sensing import SensingSystem, gaussian_matrix, uniform_noise_rms
from .signal_model import ModelParams

NOISE_C_DEFAULT = 0.1266  # per-coordinate uniform noise half-width


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    model.seed is ignored: each trial replaces it with a seed derived from
    (master_seed, trial index).  n0, when given, adds a taller t=0 matrix
    (its extra rows matter only for configs with init="simple-cs").
    epsilon overrides the default noise-norm bound c*sqrt(n).
    """

    model: ModelParams
    n: int
    noise_c: float | None
    algorithms: tuple
    horizon: int
    trials: int
    master_seed: int = 0
    n0: int | None = None
    trial_offset: int = 0
    epsilon: float | None = None
    solver_opt_tol: float = 1e-5
    solver_max_iters: int = 2500
    output_dir: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.algorithms:
            raise ValueError("at least one algorithm config is required")
        if not 0 < self.n < self.model.m:
            raise ValueError("need 0 < n < m")
        if self.n0 is not None and self.n0 < self.n:
            raise ValueError("n0 must be >= n")
        if self.noise_c is None and self.epsilon is None:
            raise ValueError("give noise_c or an explicit epsilon")
        names = [cfg.algorithm for cfg in self.algorithms]
        if len(set(names)) != len(names):
            raise ValueError("algorithm names must be unique within a spec")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def solver_options(self) -> SolverOptions:
        return SolverOptions(opt_tol=self.solver_opt_tol,
                             max_iters=self.solver_max_iters)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed for one trial's trajectory and noise streams."""
    return int(np.random.SeedSequence((master_seed, 201, trial_index))
               .generate_state(1)[0])


def build_system(spec: ExperimentSpec) -> SensingSystem:
    A = gaussian_matrix(spec.n, spec.model.m, seed=spec.master_seed)
    A0 = None
    if spec.n0 is not None:
        a0_seed = int(np.random.SeedSequence((spec.master_seed, 202))
                      .generate_state(1)[0])
        A0 = gaussian_matrix(spec.n0, spec.model.m, seed=a0_seed)
    return SensingSystem(A, A0=A0, noise_c=spec.noise_c, epsilon=spec.epsilon)


@dataclass
class AlgorithmMetrics:
    """Per-trial, per-step raw metrics for one algorithm.

    Arrays have shape (trials, horizon); column j holds step t = j+1.
    """

    algorithm: str
    err_sq: np.ndarray
    signal_sq: np.ndarray
    misses: np.ndarray
    extras: np.ndarray
    misses_prev: np.ndarray       # vs the fed-in support, before add/delete
    extras_prev: np.ndarray
    misses_add: np.ndarray        # vs the post-addition support
    extras_add: np.ndarray
    failed_steps: np.ndarray      # bool: solver raised, estimate carried over
    unconverged_steps: np.ndarray  # bool: solver returned at max_iters
    solver_iterations: np.ndarray

    def nmse(self) -> np.ndarray:
        return self.err_sq.sum(axis=0) / self.signal_sq.sum(axis=0)


@dataclass
class MetricSeries:
    """Aggregated curves, one value per t = 1..horizon per algorithm."""

    t: np.ndarray
    nmse: dict
    misses_norm: dict
    extras_norm: dict

    @property
    def algorithms(self):
        return list(self.nmse.keys())


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    support_size: np.ndarray        # (trials, horizon) true |N_t|
    metrics: dict                   # algorithm name -> AlgorithmMetrics
    trial_seeds: list
    wall_seconds: float = 0.0

    def series(self) -> MetricSeries:
        denom = self.support_size.sum(axis=0).astype(np.float64)
        t = np.arange(1, self.spec.horizon + 1)
        return MetricSeries(
            t=t,
            nmse={a: m.err_sq.sum(axis=0) / m.signal_sq.sum(axis=0)
                  for a, m in self.metrics.items()},
            misses_norm={a: m.misses.sum(axis=0) / denom
                         for a, m in self.metrics.items()},
            extras_norm={a: m.extras.sum(axis=0) / denom
                         for a, m in self.metrics.items()},
        )

    def failure_counts(self) -> dict:
        return {a: int(m.failed_steps.sum()) for a, m in self.metrics.items()}


def run_experiment(spec: ExperimentSpec, progress: bool = False) -> ExperimentResult:
    """Run every configured algorithm over `trials` trajectories.

    The sensing matrix is drawn once; all algorithms see identical
    measurements within a trial.  Steps whose solve raised are flagged in
    failed_steps (the previous estimate was carried forward) and counted in
    the manifest rather than aborting the run.
    """
    system = build_system(spec)
    options = spec.solver_options()
    horizon, trials = spec.horizon, spec.trials

    support_size = np.zeros((trials, horizon), dtype=np.int32)
    metrics = {
        cfg.algorithm: AlgorithmMetrics(
            algorithm=cfg.algorithm,
            err_sq=np.zeros((trials, horizon)),
            signal_sq=np.zeros((trials, horizon)),
            misses=np.zeros((trials, horizon), dtype=np.int32),
            extras=np.zeros((trials, horizon), dtype=np.int32),
            misses_prev=np.zeros((trials, horizon), dtype=np.int32),
            extras_prev=np.zeros((trials, horizon), dtype=np.int32),
            misses_add=np.zeros((trials, horizon), dtype=np.int32),
            extras_add=np.zeros((trials, horizon), dtype=np.int32),
            failed_steps=np.zeros((trials, horizon), dtype=bool),
            unconverged_steps=np.zeros((trials, horizon), dtype=bool),
            solver_iterations=np.zeros((trials, horizon), dtype=np.int32),
        )
        for cfg in spec.algorithms
    }
    seeds = []
    started = time.time()
    for i in range(trials):
        seed = trial_seed(spec.master_seed, spec.trial_offset + i)
        seeds.append(seed)
        params = dataclasses.replace(spec.model, seed=seed)
        for k, cfg in enumerate(spec.algorithms):
            result = run_sequence(params, system, cfg, horizon,
                                  noise_seed=seed, options=options)
            if k == 0:
                support_size[i] = [sig.support.size
                                   for sig in result.signals[1:]]
            rec = metrics[cfg.algorithm]
            for j, step in enumerate(result.steps[1:]):
                rec.err_sq[i, j] = step.err_norm ** 2
                rec.signal_sq[i, j] = float(
                    np.dot(result.signals[j + 1].x, result.signals[j + 1].x))
                rec.misses[i, j] = step.errors.miss
                rec.extras[i, j] = step.errors.extra
                rec.misses_prev[i, j] = step.errors.miss_prev
                rec.extras_prev[i, j] = step.errors.extra_prev
                # no add stage -> no detection-set errors to count
                rec.misses_add[i, j] = step.errors.miss_add or 0
                rec.extras_add[i, j] = step.errors.extra_add or 0
                rec.failed_steps[i, j] = step.failed
                rec.unconverged_steps[i, j] = not step.solver_converged
                rec.solver_iterations[i, j] = step.solver_iterations
        if progress:
            print(f"trial {spec.trial_offset + i}: "
                  f"{time.time() - started:.1f}s elapsed", flush=True)
    return ExperimentResult(spec=spec, support_size=support_size,
                            metrics=metrics, trial_seeds=seeds,
                            wall_seconds=time.time() - started)


def merge_results(first: ExperimentResult, second: ExperimentResult) -> ExperimentResult:
    """Combine two runs of the same spec split by trial_offset.

    Requires second.trial_offset == first.trial_offset + first.trials and
    identical specs otherwise; the merged aggregates equal a single run
    over the union of trials.
    """
    a, b = first.spec, second.spec
    if b.trial_offset != a.trial_offset + a.trials:
        raise ValueError("second run must start where the first ended")
    skip = ("trials", "trial_offset")
    da = {f.name: getattr(a, f.name) for f in dataclasses.fields(a)
          if f.name not in skip}
    db = {f.name: getattr(b, f.name) for f in dataclasses.fields(b)
          if f.name not in skip}
    if da != db:
        raise ValueError("specs differ beyond trials/trial_offset")
    spec = dataclasses.replace(a, trials=a.trials + b.trials)
    merged = {}
    for name, ma in first.metrics.items():
        mb = second.metrics[name]
        merged[name] = AlgorithmMetrics(
            algorithm=name,
            **{f.name: np.concatenate([getattr(ma, f.name),
                                       getattr(mb, f.name)], axis=0)
               for f in dataclasses.fields(AlgorithmMetrics)
               if f.name != "algorithm"})
    return ExperimentResult(
        spec=spec,
        support_size=np.concatenate([first.support_size,
                                     second.support_size], axis=0),
        metrics=merged,
        trial_seeds=first.trial_seeds + second.trial_seeds,
        wall_seconds=first.wall_seconds + second.wall_seconds)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def write_metrics_csv(result: ExperimentResult, path) -> Path:
    """Aggregate metrics, one row per t.

    Columns: t, then per algorithm (in spec order) {alg}_nmse,
    {alg}_misses_norm, {alg}_extras_norm.
    """
    path = Path(path)
    series = result.series()
    algs = [cfg.algorithm for cfg in result.spec.algorithms]
    header = ["t"]
    for a in algs:
        header += [f"{a}_nmse", f"{a}_misses_norm", f"{a}_extras_norm"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for j, t in enumerate(series.t):
            row = [int(t)]
            for a in algs:
                row += [f"{series.nmse[a][j]:.10g}",
                        f"{series.misses_norm[a][j]:.10g}",
                        f"{series.extras_norm[a][j]:.10g}"]
            w.writerow(row)
    return path


def write_diagnostics_csv(result: ExperimentResult, path) -> Path:
    """Per-trial trajectory log, one row per (algorithm, trial, t).

    Columns: algorithm, trial, t, err, signal_norm, then the support-error
    sizes miss/extra (final), miss_prev/extra_prev (vs the fed-in support),
    miss_add/extra_add (vs the post-addition support), support_size,
    failed, solver_converged, solver_iterations.  trial is the absolute
    index (offset included); rows are ordered by algorithm (spec order),
    then trial, then t.
    """
    path = Path(path)
    off = result.spec.trial_offset
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "trial", "t", "err", "signal_norm", "miss",
                    "extra", "miss_prev", "extra_prev", "miss_add",
                    "extra_add", "support_size", "failed",
                    "solver_converged", "solver_iterations"])
        for cfg in result.spec.algorithms:
            m = result.metrics[cfg.algorithm]
            for i in range(result.spec.trials):
                for j in range(result.spec.horizon):
                    w.writerow([
                        cfg.algorithm, off + i, j + 1,
                        f"{np.sqrt(m.err_sq[i, j]):.10g}",
                        f"{np.sqrt(m.signal_sq[i, j]):.10g}",
                        int(m.misses[i, j]), int(m.extras[i, j]),
                        int(m.misses_prev[i, j]), int(m.extras_prev[i, j]),
                        int(m.misses_add[i, j]), int(m.extras_add[i, j]),
                        int(result.support_size[i, j]),
                        int(m.failed_steps[i, j]),
                        int(not m.unconverged_steps[i, j]),
                        int(m.solver_iterations[i, j]),
                    ])
    return path


def emit_plot_data(result: ExperimentResult, out_dir) -> list:
    """Write nmse.csv, misses.csv, extras.csv (columns: t, one per algorithm).

    Values are linear (several curves sit at exactly zero, so downstream
    plots cannot use a log axis without care).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = result.series()
    algs = [cfg.algorithm for cfg in result.spec.algorithms]
    written = []
    for fname, table in (("nmse.csv", series.nmse),
                         ("misses.csv", series.misses_norm),
                         ("extras.csv", series.extras_norm)):
        path = out_dir / fname
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + algs)
            for j, t in enumerate(series.t):
                w.writerow([int(t)] + [f"{table[a][j]:.10g}" for a in algs])
        written.append(path)
    return written


def spec_to_dict(spec: ExperimentSpec) -> dict:
    d = dataclasses.asdict(spec)
    d["model"] = dataclasses.asdict(spec.model)
    d["algorithms"] = [dataclasses.asdict(cfg) for cfg in spec.algorithms]
    return d


def write_manifest(result: ExperimentResult, out_dir, files=None,
                   extra: dict | None = None) -> Path:
    """Record the full spec, per-trial seeds, versions, and failure counts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "created_unix": int(time.time()),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "spec": spec_to_dict(result.spec),
        "trial_seeds": result.trial_seeds,
        "failed_step_counts": result.failure_counts(),
        "unconverged_step_counts": {
            a: int(m.unconverged_steps.sum())
            for a, m in result.metrics.items()},
        "wall_seconds": round(result.wall_seconds, 3),
        "files": [str(f) for f in (files or [])],
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def write_outputs(result: ExperimentResult, out_dir=None) -> dict:
    """Write metrics, diagnostics, plot data, and the manifest to out_dir."""
    out_dir = Path(out_dir if out_dir is not None
                   else (result.spec.output_dir or "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    files = [write_metrics_csv(result, out_dir / "metrics.csv"),
             write_diagnostics_csv(result, out_dir / "diagnostics.csv")]
    files += emit_plot_data(result, out_dir)
    manifest = write_manifest(result, out_dir, files=files)
    return {"manifest": manifest, "files": files}


# ---------------------------------------------------------------------------
# the four benchmark panels
# ---------------------------------------------------------------------------

# Shared protocol: m=200, s0=20, sa=2, uniform(-c, c) noise with c=0.1266,
# oracle init, alpha_add=c/2, alpha_del=r/2, alpha midway between them.
# Every algorithm solves with the residual ball at the rms noise norm
# c*sqrt(n/3) (see uniform_noise_rms) rather than the worst case c*sqrt(n):
# the uniform noise norm concentrates at the rms level, and the tighter ball
# roughly halves the steady-state tracking error of the stable algorithms.
# Panels differ in measurement count and how fast magnitudes move:
#   a: n=65, r=1   (everything comfortable)
#   b: n=59, r=1   (fewer measurements; CS-on-residual degrades)
#   c: n=59, r=2/3 (slower increase; single-threshold tracking degrades)
#   d: n=59, r=2/5, d=5 (very slow increase; add-LS-del degrades too)
BENCHMARK_PANELS = {
    "a": {"n": 65, "r": 1.0, "d": 3},
    "b": {"n": 59, "r": 1.0, "d": 3},
    "c": {"n": 59, "r": 2.0 / 3.0, "d": 3},
    "d": {"n": 59, "r": 2.0 / 5.0, "d": 5},
}

PANEL_ALGORITHMS = ("modcs", "modcs-add-ls-del", "lscs", "simple-cs",
                    "gauss-cs")


def benchmark_spec(panel: str, trials: int = 100, horizon: int = 200,
                master_seed: int = 0, algorithms=None,
                output_dir: str | None = None) -> ExperimentSpec:
    """ExperimentSpec for one benchmark panel (a, b, c, or d)."""
    if panel not in BENCHMARK_PANELS:
        raise ValueError(f"panel must be one of {sorted(BENCHMARK_PANELS)}")
    p = BENCHMARK_PANELS[panel]
    c = NOISE_C_DEFAULT
    alpha_add = c / 2.0
    alpha_del = p["r"] / 2.0
    alpha = (alpha_add + alpha_del) / 2.0
    ball = uniform_noise_rms(c, p["n"])
    chosen = tuple(algorithms) if algorithms else PANEL_ALGORITHMS
    configs = []
    for name in chosen:
        if name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {name!r}")
        if name in ("modcs-add-ls-del", "lscs"):
            configs.append(RecoveryConfig(algorithm=name, alpha_add=alpha_add,
                                          alpha_del=alpha_del, epsilon=ball))
        else:
            configs.append(RecoveryConfig(algorithm=name, alpha=alpha,
                                          epsilon=ball))
    model = ModelParams(m=200, s0=20, sa=2, r=p["r"], d=p["d"], seed=0)
    return ExperimentSpec(model=model, n=p["n"], noise_c=c,
                          algorithms=tuple(configs), horizon=horizon,
                          trials=trials, master_seed=master_seed,
                          output_dir=output_dir)
