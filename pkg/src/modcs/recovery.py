"""Recursive recovery of sparse signal sequences from streaming measurements.

Per time step, every algorithm here produces an estimate x_hat_t and a support
estimate N_hat_t that seeds the next step:

* modcs            : l1 on the complement of the previous support estimate,
                     then one threshold (alpha) to re-estimate the support.
* modcs-add-ls-del : same l1 stage, then a low add threshold (alpha_add),
                     least squares on the augmented support, a delete
                     threshold (alpha_del) on the LS values, and a final
                     least squares on the pruned support.
* lscs             : least squares on the previous support, plain BPDN on the
                     measurement residual, add back the LS estimate, then the
                     same add-LS-del support refinement.
* simple-cs        : memoryless BPDN with one threshold for the reported
                     support (the estimate itself stays un-debiased).
* gauss-cs         : simple-cs followed by an LS re-fit on the thresholded
                     support (memoryless, like simple-cs).

Detection thresholds are strict (|x| > alpha); deletion removes |x| <= alpha_del.
At t=0 either an oracle hands over the true support minus its sa weakest
entries ("oracle" init, the usual warm-start assumption) or the algorithm runs
its own t=0 branch on a (possibly taller) initial matrix ("simple-cs" init).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import signal_model as sigmod
from .l1min import (DEFAULT_OPTIONS, InfeasibleProblemError, PartialL1Solver,
                    RankDeficiencyError, SolverOptions, SolverResult,
                    least_squares_on_support)
from .sensing import SensingSystem, measure

ALG_SIMPLE_CS = "simple-cs"
ALG_GAUSS_CS = "gauss-cs"
ALG_MODCS = "modcs"
ALG_MODCS_ALD = "modcs-add-ls-del"
ALG_LSCS = "lscs"
ALGORITHMS = (ALG_SIMPLE_CS, ALG_GAUSS_CS, ALG_MODCS, ALG_MODCS_ALD, ALG_LSCS)

INIT_ORACLE = "oracle"
INIT_SIMPLE_CS = "simple-cs"
INIT_MODES = (INIT_ORACLE, INIT_SIMPLE_CS)

_NEEDS_ALPHA = (ALG_SIMPLE_CS, ALG_GAUSS_CS, ALG_MODCS)
_NEEDS_ADD_DEL = (ALG_MODCS_ALD, ALG_LSCS)


@dataclass(frozen=True)
class RecoveryConfig:
    """Algorithm selection, thresholds, and initialization mode.

    epsilon overrides the sensing system's residual-ball radius when set.
    """

    algorithm: str
    alpha: float | None = None
    alpha_add: float | None = None
    alpha_del: float | None = None
    epsilon: float | None = None
    init: str = INIT_ORACLE

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}")
        if self.algorithm in _NEEDS_ALPHA and self.alpha is None:
            raise ValueError(f"{self.algorithm} needs alpha")
        if self.algorithm in _NEEDS_ADD_DEL:
            if self.alpha_add is None or self.alpha_del is None:
                raise ValueError(f"{self.algorithm} needs alpha_add and alpha_del")


def support_above(x: np.ndarray, alpha: float) -> np.ndarray:
    """Indices with |x_i| strictly above alpha."""
    return np.flatnonzero(np.abs(x) > alpha)


def _cap_support(candidates: np.ndarray, priority: np.ndarray, values: np.ndarray,
                 n: int) -> np.ndarray:
    """Keep at most n indices: all of `priority` first (largest |values| if it
    alone overflows), then the remaining candidates by decreasing |values|."""
    priority = np.asarray(priority, dtype=np.int64)
    candidates = np.asarray(candidates, dtype=np.int64)
    if priority.size >= n:
        order = np.argsort(-np.abs(values[priority]), kind="stable")
        return np.sort(priority[order[:n]])
    extra = np.setdiff1d(candidates, priority)
    room = n - priority.size
    if extra.size > room:
        order = np.argsort(-np.abs(values[extra]), kind="stable")
        extra = extra[order[:room]]
    return np.sort(np.concatenate([priority, extra]))


@dataclass(frozen=True)
class StepEstimate:
    """Everything one time step produced (truth-free)."""

    x_hat: np.ndarray
    x_raw: np.ndarray                 # l1-stage output before any LS refit
    support: np.ndarray               # N_hat_t
    t_used: np.ndarray                # support knowledge fed into the step
    t_add: np.ndarray | None          # support after the addition stage
    x_add: np.ndarray | None          # LS estimate on t_add
    solver: SolverResult | None


def modcs_step(solver: PartialL1Solver, y: np.ndarray, T, epsilon: float,
               alpha: float, options: SolverOptions = DEFAULT_OPTIONS) -> StepEstimate:
    """One step of the partial-support l1 algorithm with single-threshold
    support re-estimation."""
    res = solver.solve(y, T, epsilon, options)
    support = support_above(res.beta, alpha)
    T = np.asarray(sorted(T) if T is not None else [], dtype=np.int64)
    return StepEstimate(x_hat=res.beta, x_raw=res.beta, support=support,
                        t_used=T, t_add=None, x_add=None, solver=res)


def _add_ls_del(A: np.ndarray, y: np.ndarray, T: np.ndarray, x_raw: np.ndarray,
                alpha_add: float, alpha_del: float):
    """Shared support-refinement tail: add -> LS -> delete -> final LS."""
    n = A.shape[0]
    adds = support_above(x_raw, alpha_add)
    t_add = np.union1d(T, adds)
    if t_add.size > n:
        t_add = _cap_support(t_add, T, x_raw, n)
    x_add = least_squares_on_support(A, y, t_add)
    keep = np.abs(x_add[t_add]) > alpha_del          # delete |.| <= alpha_del
    t_new = t_add[keep]
    x_final = least_squares_on_support(A, y, t_new)
    return t_add, x_add, t_new, x_final


def modcs_add_ls_del_step(solver: PartialL1Solver, y: np.ndarray, T, epsilon: float,
                          alpha_add: float, alpha_del: float,
                          options: SolverOptions = DEFAULT_OPTIONS) -> StepEstimate:
    """Partial-support l1 stage followed by add-LS-del support refinement."""
    res = solver.solve(y, T, epsilon, options)
    T = np.asarray(sorted(T) if T is not None else [], dtype=np.int64)
    t_add, x_add, t_new, x_final = _add_ls_del(solver.A, y, T, res.beta,
                                               alpha_add, alpha_del)
    return StepEstimate(x_hat=x_final, x_raw=res.beta, support=t_new,
                        t_used=T, t_add=t_add, x_add=x_add, solver=res)


def lscs_step(solver: PartialL1Solver, y: np.ndarray, T, epsilon: float,
              alpha_add: float, alpha_del: float,
              options: SolverOptions = DEFAULT_OPTIONS) -> StepEstimate:
    """CS on the LS residual, then add-LS-del support refinement.

    The initial LS uses at most n support entries (the previous estimate is
    truncated by magnitude if it ever overflows, which only happens in
    unstable regimes).
    """
    A = solver.A
    T = np.asarray(sorted(T) if T is not None else [], dtype=np.int64)
    x_init = least_squares_on_support(A, y, T)
    res = solver.solve(y - A @ x_init, None, epsilon, options)
    x_raw = res.beta + x_init
    t_add, x_add, t_new, x_final = _add_ls_del(A, y, T, x_raw, alpha_add, alpha_del)
    return StepEstimate(x_hat=x_final, x_raw=x_raw, support=t_new,
                        t_used=T, t_add=t_add, x_add=x_add, solver=res)


def simple_cs_step(solver: PartialL1Solver, y: np.ndarray, epsilon: float,
                   alpha: float, options: SolverOptions = DEFAULT_OPTIONS) -> StepEstimate:
    """Memoryless BPDN; the threshold only feeds the reported support."""
    return modcs_step(solver, y, None, epsilon, alpha, options)


def gauss_cs_step(solver: PartialL1Solver, y: np.ndarray, epsilon: float,
                  alpha: float, options: SolverOptions = DEFAULT_OPTIONS) -> StepEstimate:
    """BPDN followed by an LS re-fit on the thresholded support."""
    res = solver.solve(y, None, epsilon, options)
    support = support_above(res.beta, alpha)
    n = solver.n
    if support.size > n:
        support = _cap_support(support, np.empty(0, np.int64), res.beta, n)
    x_hat = least_squares_on_support(solver.A, y, support)
    return StepEstimate(x_hat=x_hat, x_raw=res.beta, support=support,
                        t_used=np.empty(0, np.int64), t_add=None, x_add=None,
                        solver=res)


@dataclass(frozen=True)
class SupportErrors:
    """Set-difference sizes against the true support at one step.

    *_prev : misses/extras of the support knowledge fed into the step
    *_add  : after the addition stage (None when the step has no add stage)
    miss/extra : of the final support estimate
    """

    miss_prev: int
    extra_prev: int
    miss_add: int | None
    extra_add: int | None
    miss: int
    extra: int


@dataclass
class RecoveryStep:
    """One recorded time step of a sequence run."""

    t: int
    estimate: StepEstimate
    errors: SupportErrors | None = None
    err_norm: float | None = None       # ||x_t - x_hat_t||
    err_raw_norm: float | None = None   # ||x_t - x_raw_t||
    failed: bool = False
    solver_converged: bool = True
    solver_iterations: int = 0


@dataclass
class SequenceResult:
    config: RecoveryConfig
    steps: list            # RecoveryStep, t = 0..horizon
    signals: list          # SparseSignal truth, t = 0..horizon
    power: float


def _support_errors(truth: np.ndarray, est: StepEstimate) -> SupportErrors:
    true_set = set(truth.tolist())
    t_used = set(est.t_used.tolist())
    final = set(est.support.tolist())
    if est.t_add is not None:
        t_add = set(est.t_add.tolist())
        miss_add, extra_add = len(true_set - t_add), len(t_add - true_set)
    else:
        miss_add = extra_add = None
    return SupportErrors(
        miss_prev=len(true_set - t_used), extra_prev=len(t_used - true_set),
        miss_add=miss_add, extra_add=extra_add,
        miss=len(true_set - final), extra=len(final - true_set))


def _oracle_init(sig: sigmod.SparseSignal, params: sigmod.ModelParams) -> StepEstimate:
    """True t=0 support minus its sa weakest entries (ties broken by index)."""
    sup = sig.support
    order = np.lexsort((sup, np.abs(sig.x[sup])))
    kept = np.sort(sup[order[params.sa:]])
    x0 = np.zeros_like(sig.x)
    x0[kept] = sig.x[kept]
    return StepEstimate(x_hat=x0, x_raw=x0, support=kept,
                        t_used=kept, t_add=None, x_add=None, solver=None)


def _run_step(cfg: RecoveryConfig, solver: PartialL1Solver, y: np.ndarray,
              T, epsilon: float, options: SolverOptions) -> StepEstimate:
    if cfg.algorithm == ALG_MODCS:
        return modcs_step(solver, y, T, epsilon, cfg.alpha, options)
    if cfg.algorithm == ALG_MODCS_ALD:
        return modcs_add_ls_del_step(solver, y, T, epsilon,
                                     cfg.alpha_add, cfg.alpha_del, options)
    if cfg.algorithm == ALG_LSCS:
        return lscs_step(solver, y, T, epsilon, cfg.alpha_add, cfg.alpha_del, options)
    if cfg.algorithm == ALG_SIMPLE_CS:
        return simple_cs_step(solver, y, epsilon, cfg.alpha, options)
    if cfg.algorithm == ALG_GAUSS_CS:
        return gauss_cs_step(solver, y, epsilon, cfg.alpha, options)
    raise AssertionError(cfg.algorithm)


def run_sequence(params: sigmod.ModelParams, system: SensingSystem,
                 config: RecoveryConfig, horizon: int, noise_seed: int | None = None,
                 options: SolverOptions = DEFAULT_OPTIONS) -> SequenceResult:
    """Generate a trajectory, measure it, and track it with one algorithm.

    Returns steps for t = 0..horizon; t=0 is produced by the configured init
    mode.  A step whose solve raises (infeasible / rank trouble) is recorded
    as failed and carries the previous estimate and support forward; a solve
    that merely hits max_iters is used as-is and flagged via
    solver_converged=False.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if noise_seed is None:
        noise_seed = params.seed
    solver = PartialL1Solver(system.A, options)
    solver0 = solver
    if system.A0 is not None and config.init == INIT_SIMPLE_CS:
        solver0 = PartialL1Solver(system.A0, options)

    state = sigmod.init_state(params)
    sig = sigmod.signal(state)
    signals = [sig]
    steps: list[RecoveryStep] = []

    # ---- t = 0 -----------------------------------------------------------
    if config.init == INIT_ORACLE:
        est = _oracle_init(sig, params)
        step0 = RecoveryStep(t=0, estimate=est)
    else:
        y0, _ = measure(system, sig.x, 0, noise_seed)
        eps0 = config.epsilon if config.epsilon is not None else system.epsilon_for(0)
        try:
            # every algorithm runs its own pipeline with empty prior support
            est = _run_step(config, solver0, y0, None, eps0, options)
            step0 = RecoveryStep(t=0, estimate=est,
                                 solver_converged=est.solver.converged,
                                 solver_iterations=est.solver.iterations)
        except (InfeasibleProblemError, RankDeficiencyError, np.linalg.LinAlgError):
            empty = StepEstimate(x_hat=np.zeros(params.m), x_raw=np.zeros(params.m),
                                 support=np.empty(0, np.int64),
                                 t_used=np.empty(0, np.int64), t_add=None,
                                 x_add=None, solver=None)
            step0 = RecoveryStep(t=0, estimate=empty, failed=True)
    step0.errors = _support_errors(sig.support, step0.estimate)
    step0.err_norm = float(np.linalg.norm(sig.x - step0.estimate.x_hat))
    step0.err_raw_norm = float(np.linalg.norm(sig.x - step0.estimate.x_raw))
    steps.append(step0)

    # ---- t >= 1 ----------------------------------------------------------
    epsilon = config.epsilon if config.epsilon is not None else system.epsilon
    for t in range(1, horizon + 1):
        state = sigmod.step(state)
        sig = sigmod.signal(state)
        signals.append(sig)
        y, _ = measure(system, sig.x, t, noise_seed)
        prev = steps[-1]
        T_prev = prev.estimate.support
        if config.algorithm == ALG_LSCS and T_prev.size > system.n:
            T_prev = _cap_support(T_prev, np.empty(0, np.int64),
                                  prev.estimate.x_hat, system.n)
        try:
            est = _run_step(config, solver, y, T_prev, epsilon, options)
            rec = RecoveryStep(t=t, estimate=est,
                               solver_converged=(est.solver.converged
                                                 if est.solver else True),
                               solver_iterations=(est.solver.iterations
                                                  if est.solver else 0))
        except (InfeasibleProblemError, RankDeficiencyError, np.linalg.LinAlgError):
            carried = StepEstimate(x_hat=prev.estimate.x_hat, x_raw=prev.estimate.x_raw,
                                   support=prev.estimate.support,
                                   t_used=T_prev, t_add=None, x_add=None, solver=None)
            rec = RecoveryStep(t=t, estimate=carried, failed=True)
        rec.errors = _support_errors(sig.support, rec.estimate)
        rec.err_norm = float(np.linalg.norm(sig.x - rec.estimate.x_hat))
        rec.err_raw_norm = float(np.linalg.norm(sig.x - rec.estimate.x_raw))
        steps.append(rec)

    return SequenceResult(config=config, steps=steps, signals=signals,
                          power=params.expected_power())
