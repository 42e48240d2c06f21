"""Model extraction attack and defense laboratory.

Server models sit behind a label-only query oracle that meters every
query, enforces an optional budget, and can apply an output defense
(constant label flipping or per-query model randomization). Extraction
attacks reconstruct the served model from oracle answers; the harness
measures queries, dollar cost, and extraction error under seeds that
make every run replayable.
"""

from .datasets import (
    Dataset,
    bin_and_onehot,
    load_csv,
    save_truth,
    synth_halfspace,
    synth_tree_labeled,
    test_accuracy,
    train_test_split,
    write_csv,
)
from .defense_analysis import (
    DistanceStats,
    HotellingResult,
    RhoEstimate,
    boundary_distance_stats,
    estimate_rho,
    f_survival,
    hotelling_t2,
    regularized_incomplete_beta,
    stability_stop,
)
from .geometry import (
    Halfspace,
    geometric_error,
    sample_unit_sphere,
    sign_pm1,
    uniform_error_estimate,
    unit_vector,
)
from .halfspace import (
    BisectionPlan,
    ExtractionReport,
    angular_bisect,
    average_attack,
    average_attack_m,
    equation_solve_regression,
    lowd_meek_extract,
    majority_vote_query,
    noisy_qs_extract,
    plan_query_bound,
    qs_extract_halfspace,
    qs_extract_stability,
    repetition_count,
)
from .harness import (
    ExperimentConfig,
    RunRecord,
    run_experiment,
    run_sweep,
    write_sweep_csv,
)
from .nonlinear import (
    eat_extract_svm,
    forest_alternative,
    importance_weighted_error,
    iwal_extract,
    iwal_solve_s,
    iwal_threshold,
    tree_alternative,
)
from .oracle import (
    BudgetExceeded,
    ConstantFlip,
    LinearRegression,
    ModelRandomization,
    ModeError,
    NoDefense,
    Oracle,
    QueryLedger,
    ledger_cost,
)
from .svm import KernelSvmModel, svm_presign, svm_train
from .trees import (
    DecisionTree,
    RandomForest,
    TreeNode,
    dt_train_weighted,
    rf_train_weighted,
)

__version__ = "0.1.0"

__all__ = [
    "BisectionPlan",
    "BudgetExceeded",
    "ConstantFlip",
    "Dataset",
    "DecisionTree",
    "DistanceStats",
    "ExperimentConfig",
    "ExtractionReport",
    "Halfspace",
    "HotellingResult",
    "KernelSvmModel",
    "LinearRegression",
    "ModeError",
    "ModelRandomization",
    "NoDefense",
    "Oracle",
    "QueryLedger",
    "RandomForest",
    "RhoEstimate",
    "RunRecord",
    "TreeNode",
    "angular_bisect",
    "average_attack",
    "average_attack_m",
    "bin_and_onehot",
    "boundary_distance_stats",
    "dt_train_weighted",
    "eat_extract_svm",
    "equation_solve_regression",
    "estimate_rho",
    "f_survival",
    "forest_alternative",
    "geometric_error",
    "hotelling_t2",
    "importance_weighted_error",
    "iwal_extract",
    "iwal_solve_s",
    "iwal_threshold",
    "ledger_cost",
    "load_csv",
    "lowd_meek_extract",
    "majority_vote_query",
    "noisy_qs_extract",
    "plan_query_bound",
    "qs_extract_halfspace",
    "qs_extract_stability",
    "regularized_incomplete_beta",
    "repetition_count",
    "rf_train_weighted",
    "run_experiment",
    "run_sweep",
    "sample_unit_sphere",
    "save_truth",
    "sign_pm1",
    "stability_stop",
    "svm_presign",
    "svm_train",
    "synth_halfspace",
    "synth_tree_labeled",
    "test_accuracy",
    "train_test_split",
    "tree_alternative",
    "uniform_error_estimate",
    "unit_vector",
    "write_csv",
    "write_sweep_csv",
]
