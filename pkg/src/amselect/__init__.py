"""Consensus-driven active model selection for pools of candidate classifiers."""

from .acquisition import (
    AcquisitionMethod,
    EigScore,
    ScoringStats,
    eig_score,
    eig_scores_memoized,
    entropy,
    select_next,
)
from .beliefs import (
    BeliefState,
    ConsensusSummary,
    PriorConfig,
    apply_label,
    build_prior,
    consensus,
    empirical_confusions,
    load_beliefs,
    mean_confusions,
    restore,
    save_beliefs,
    snapshot,
)
from .benchmark import (
    BenchmarkError,
    BenchmarkTask,
    SyntheticSpec,
    ValidationReport,
    confusions_from_accuracies,
    generate_synthetic,
    hard_predictions,
    load_benchmark,
    save_benchmark,
    task_from_scores,
    validate,
)
from .harness import (
    RunConfig,
    RunSummary,
    SelectionRun,
    aggregate,
    export_report,
    regret_at,
    run_config_from_json,
    run_selection,
    run_unsupervised,
    true_best,
    unsupervised_pbest,
)
from .pbest import (
    BetaMixture,
    ClassMarginal,
    PBest,
    StepMarginals,
    class_marginal,
    compute_pbest,
    diagonal_betas,
    item_class_posterior,
    item_class_posteriors,
    mean_accuracy,
    pbest_from_mixture,
    pbest_monte_carlo,
    select_model,
)

__version__ = "0.1.0"
