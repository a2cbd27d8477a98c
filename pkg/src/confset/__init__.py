"""Set-valued classification with simultaneous outlier detection.

Given labeled training data, the procedure scores a test point against each
class with a variance-scaled squared distance, converts the scores to
conformal p-values against the class's own training scores, applies a
step-up multiplicity adjustment across classes within each test point, and
keeps every class whose adjusted p-value clears a level-dependent threshold.
The result is a label set per test point: a singleton is a confident
classification, a larger set an ambiguous one, and the empty set flags the
point as an outlier belonging to no known class. Acceptance thresholds are
calibrated so that, per class, wrongly excluded true labels are controlled
at the target rate in the false-discovery sense.

Quick start::

    import confset

    config = confset.multi_class_config(p=100, n_k=200, rho=0.5)
    train, test = confset.generate(config)
    pvals, sets = confset.predict(train, test, alpha=0.05)
    report = confset.evaluate_sets(sets, test.truth)
    print(confset.render_results([report]))
"""

from .core import (
    ClassSummary,
    DataError,
    DegenerateVarianceError,
    DeviationBound,
    LabeledDataset,
    OracleParams,
    PredictionSets,
    PValueMatrix,
    TestBatch,
    ValidationReport,
    validate_dataset,
)
from .scoring import (
    empirical_score,
    fit_class_summary,
    oracle_score,
    score_batch,
)
from .conformal import (
    acceptance_threshold,
    bh_adjust,
    conformal_pvalue,
    conformal_pvalues,
    predict,
    set_size_discrepancy,
)
from .metrics import (
    METRIC_ORDER,
    MetricsReport,
    accuracy,
    ambiguity,
    classwise_fdr,
    coverage,
    evaluate_sets,
    false_label_rate,
    global_fdr,
    outlier_power,
    rejection_global_fdp,
    scw_fdr_loss,
)
from .datagen import (
    DEFAULT_ATOM_SEED,
    ComponentSpec,
    ScenarioConfig,
    apportion_test_counts,
    generate,
    generate_test_batch,
    generate_training,
    make_atoms,
    multi_class_config,
    one_class_config,
    oracle_params,
    sample_points,
    with_run_seed,
)
from .io import (
    ExperimentConfig,
    from_jsonable,
    load_config,
    load_csv,
    load_json,
    read_batch_csv,
    read_results,
    read_sets_csv,
    render_results,
    save_config,
    save_json,
    split_train_test,
    to_jsonable,
    write_batch_csv,
    write_dataset_csv,
    write_results,
    write_pvalues_csv,
    write_sets_csv,
    write_thresholds_csv,
)
from .experiment import (
    CellResult,
    evaluate_prediction,
    replicate_seed,
    run_cell,
    run_experiment,
    run_replicate,
)
from .validation import (
    BENCHMARK_CHECKS,
    CHECKS,
    DEFAULT_CHECKS,
    EXTRA_CHECKS,
    CheckResult,
    run_checks,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # containers and errors
    "ClassSummary",
    "DataError",
    "DegenerateVarianceError",
    "DeviationBound",
    "LabeledDataset",
    "OracleParams",
    "PredictionSets",
    "PValueMatrix",
    "TestBatch",
    "ValidationReport",
    "validate_dataset",
    # scoring
    "empirical_score",
    "fit_class_summary",
    "oracle_score",
    "score_batch",
    # conformal prediction
    "acceptance_threshold",
    "bh_adjust",
    "conformal_pvalue",
    "conformal_pvalues",
    "predict",
    "set_size_discrepancy",
    # metrics
    "METRIC_ORDER",
    "MetricsReport",
    "accuracy",
    "ambiguity",
    "classwise_fdr",
    "coverage",
    "evaluate_sets",
    "false_label_rate",
    "global_fdr",
    "outlier_power",
    "rejection_global_fdp",
    "scw_fdr_loss",
    # data generation
    "DEFAULT_ATOM_SEED",
    "ComponentSpec",
    "ScenarioConfig",
    "apportion_test_counts",
    "generate",
    "generate_test_batch",
    "generate_training",
    "make_atoms",
    "multi_class_config",
    "one_class_config",
    "oracle_params",
    "sample_points",
    "with_run_seed",
    # file formats
    "ExperimentConfig",
    "from_jsonable",
    "load_config",
    "load_csv",
    "load_json",
    "read_batch_csv",
    "read_results",
    "read_sets_csv",
    "render_results",
    "save_config",
    "save_json",
    "split_train_test",
    "to_jsonable",
    "write_batch_csv",
    "write_dataset_csv",
    "write_results",
    "write_pvalues_csv",
    "write_sets_csv",
    "write_thresholds_csv",
    # experiments
    "CellResult",
    "evaluate_prediction",
    "replicate_seed",
    "run_cell",
    "run_experiment",
    "run_replicate",
    # validation
    "BENCHMARK_CHECKS",
    "CHECKS",
    "DEFAULT_CHECKS",
    "EXTRA_CHECKS",
    "CheckResult",
    "run_checks",
]
