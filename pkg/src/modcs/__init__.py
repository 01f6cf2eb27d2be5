"""Recursive recovery of time sequences of sparse signals from noisy
undersampled linear measurements.

The package tracks a slowly changing sparse vector x_t from y_t = A x_t + w_t
by solving, at each step, an l1 minimization restricted to the complement of
the previous support estimate, optionally refined by add-LS-delete support
updates.  It also ships the piecewise-constant-support signal model used in
the experiments, restricted-isometry/orthogonality estimators, executable
stability-condition checkers, and a Monte Carlo harness.
"""

__version__ = "0.1.0"

from .signal_model import (  # noqa: F401
    ModelParams,
    SignalModelState,
    SparseSignal,
    cohort_sets,
    init_state,
    iterate_signals,
    signal,
    step,
)
from .sensing import (  # noqa: F401
    SensingSystem,
    RicRocEstimate,
    gaussian_matrix,
    load_matrix_csv,
    measure,
    ric_exhaustive,
    ric_sampled,
    roc,
    save_matrix_csv,
    uniform_noise_rms,
)
from .l1min import (  # noqa: F401
    DEFAULT_OPTIONS,
    InfeasibleProblemError,
    PartialL1Solver,
    RankDeficiencyError,
    SolverOptions,
    SolverResult,
    least_squares_on_support,
    solve_partial_l1,
)
from .recovery import (  # noqa: F401
    ALGORITHMS,
    RecoveryConfig,
    RecoveryStep,
    SequenceResult,
    StepEstimate,
    SupportErrors,
    gauss_cs_step,
    lscs_step,
    modcs_add_ls_del_step,
    modcs_step,
    run_sequence,
    simple_cs_step,
    support_above,
)
from .analysis import (  # noqa: F401
    BoundConstants,
    BoundNotApplicableError,
    Condition,
    ConditionReport,
    ExhaustiveRicRoc,
    FixedRicRoc,
    RECOVERY_COEFF,
    SampledRicRoc,
    bound_constants,
    c1_constant,
    c2_constant,
    check_add_ls_del_stability,
    check_add_ls_del_stability_general,
    check_add_ls_del_stability_relaxed,
    check_lscs_stability,
    check_modcs_stability,
    estimate_zeta,
    measure_false_additions,
    modcs_error_bound,
    support_error_spread,
    verify_step_facts,
)
from .harness import (  # noqa: F401
    ExperimentResult,
    ExperimentSpec,
    MetricSeries,
    emit_plot_data,
    benchmark_spec,
    merge_results,
    run_experiment,
    write_outputs,
)
