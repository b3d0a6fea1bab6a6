"""Sparse additive regression with per-feature adaptive smoothness.

Each numeric feature enters the model twice — as a standardized natural
cubic spline bundle (its nonlinear part) and as a centered linear column —
and every block carries its own variance hyperparameter driven to exact
zero by a single global regularization strength α.  Fitting therefore
selects features *and* classifies each one as zero, purely linear or
nonlinear, while adapting the amount of smoothing per feature.

Typical library use::

    from vard import (ColumnSpec, load_table, build_design, make_alpha_grid,
                      cross_validate, fit, FitConfig)

    ds = load_table("data.csv", [ColumnSpec("y", role="response")])
    design = build_design(ds)
    grid = make_alpha_grid(design.terms, design.y)
    cv = cross_validate(ds, grid, folds=10, seed=0,
                        config=FitConfig(alpha=1.0))
    model = fit(design.terms, design.y, FitConfig(alpha=cv.alpha_015se),
                layout=design.layout, intercept=design.intercept)

The ``vard`` console script exposes the same workflow as subcommands
(``fit``, ``path``, ``cv``, ``predict``, ``curves``, ``simulate``).
"""

from .artifact import FORMAT_VERSION, ModelArtifact
from .basis import (
    RawBasis,
    integrate_curvature_products,
    natural_cubic_basis,
    penalty_matrix,
    place_knots,
)
from .data import (
    CategoricalFeature,
    ColumnSpec,
    Dataset,
    Design,
    NumericFeature,
    build_design,
    encode_categorical,
    load_table,
    transform_column,
)
from .errors import (
    DegenerateFeatureError,
    DegenerateFoldError,
    EmptyBlockError,
    IllConditionedPenaltyError,
    InconsistentStateError,
    SchemaError,
    VardError,
)
from .modelselect import (
    AlphaGrid,
    CvResult,
    cross_validate,
    kfold_split,
    make_alpha_grid,
    path_fit,
)
from .simbench import (
    CLASSES,
    ExperimentReport,
    GeneratedData,
    MetricReport,
    SyntheticSpec,
    dataset_from_matrix,
    evaluate,
    experiment_cases,
    experiment_spec,
    generate,
    run_experiment,
    component_function,
)
from .solver import (
    BlockState,
    FeatureLayout,
    FitConfig,
    FitResult,
    alpha_max,
    block_update,
    fit,
    fitted_values,
    interval_bounds,
    minimize_g,
    objective,
    univariate_g,
)
from .standardize import (
    StandardizedTerm,
    apply_transform,
    diagonalize_gram,
    orthogonalize_to_linear,
    standardize_term,
    whiten_by_penalty,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "VardError",
    "DegenerateFeatureError",
    "DegenerateFoldError",
    "EmptyBlockError",
    "IllConditionedPenaltyError",
    "InconsistentStateError",
    "SchemaError",
    # basis
    "RawBasis",
    "place_knots",
    "natural_cubic_basis",
    "integrate_curvature_products",
    "penalty_matrix",
    # standardization
    "StandardizedTerm",
    "orthogonalize_to_linear",
    "whiten_by_penalty",
    "diagonalize_gram",
    "standardize_term",
    "apply_transform",
    # solver
    "BlockState",
    "FitConfig",
    "FitResult",
    "FeatureLayout",
    "univariate_g",
    "interval_bounds",
    "minimize_g",
    "block_update",
    "objective",
    "alpha_max",
    "fitted_values",
    "fit",
    # model selection
    "AlphaGrid",
    "CvResult",
    "make_alpha_grid",
    "path_fit",
    "kfold_split",
    "cross_validate",
    # data handling
    "ColumnSpec",
    "Dataset",
    "NumericFeature",
    "CategoricalFeature",
    "Design",
    "load_table",
    "encode_categorical",
    "build_design",
    "transform_column",
    # artifacts
    "FORMAT_VERSION",
    "ModelArtifact",
    # synthetic benchmarks
    "CLASSES",
    "SyntheticSpec",
    "GeneratedData",
    "MetricReport",
    "ExperimentReport",
    "component_function",
    "generate",
    "dataset_from_matrix",
    "evaluate",
    "experiment_cases",
    "experiment_spec",
    "run_experiment",
]
