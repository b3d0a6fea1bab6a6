"""Synthetic benchmark suite: data generators, metrics and the two
hard-coded experiment catalogs.

Component functions::

    phi_1(x) = 10 exp(-4.6 x^2)     (smooth bump, nonlinear)
    phi_2(x) = 4 cos(1.7 x)         (nonlinear)
    phi_3(x) = 5 (x + 1.3)^2        (nonlinear)
    phi_4(x) = 6 (x + 5)            (linear)

Design rows are either i.i.d. U(-1, 1) entries or equicorrelated standard
normals, the latter realized as x = sqrt(1-rho) z + sqrt(rho) w 1 with z a
standard-normal vector and w a shared scalar (covariance (1-rho)I + rho J).

Reported metrics: in-sample MSE of the per-feature fits (both the estimate
and the truth centered by their sample means — additive components are only
identified up to constants), FDR / TPR of feature selection, and the 3x3
truth-by-predicted confusion matrix over {nonlinear, linear, zero}.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._io import write_csv
from .data import ColumnSpec, Dataset, Design, build_design
from .modelselect import cross_validate, make_alpha_grid
from .solver import FitConfig, FitResult, fit

__all__ = [
    "CLASSES",
    "SyntheticSpec",
    "GeneratedData",
    "MetricReport",
    "ExperimentReport",
    "component_function",
    "generate",
    "dataset_from_matrix",
    "evaluate",
    "experiment_spec",
    "experiment_cases",
    "run_experiment",
]

CLASSES = ("nonlinear", "linear", "zero")


def component_function(fid: int, x):
    """Evaluate component function ``fid`` (1..4) elementwise."""
    x = np.asarray(x, dtype=float)
    if fid == 1:
        return 10.0 * np.exp(-4.6 * x**2)
    if fid == 2:
        return 4.0 * np.cos(1.7 * x)
    if fid == 3:
        return 5.0 * (x + 1.3) ** 2
    if fid == 4:
        return 6.0 * (x + 5.0)
    raise ValueError(f"unknown component function id {fid!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """One synthetic regression problem.

    ``assignments`` maps 1-based feature index to ``(function id,
    multiplier)``; unassigned features contribute exactly zero.
    """

    n: int
    p: int
    sigma2: float = 1.0
    assignments: dict = None
    marginal: str = "uniform"   # "uniform" (U(-1,1) entries) or "normal"
    rho: float = 0.0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be nonnegative")
        if self.marginal not in ("uniform", "normal"):
            raise ValueError(f"unknown marginal {self.marginal!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.rho > 0.0 and self.marginal != "normal":
            raise ValueError("correlated designs require the normal marginal")
        assignments = dict(self.assignments or {})
        for j, (fid, _) in assignments.items():
            if not 1 <= j <= self.p:
                raise ValueError(f"assigned feature index {j} outside 1..{self.p}")
            if fid not in (1, 2, 3, 4):
                raise ValueError(f"unknown component function id {fid!r}")
        object.__setattr__(self, "assignments", assignments)

    def truth_labels(self) -> tuple:
        labels = []
        for j in range(1, self.p + 1):
            if j in self.assignments and self.assignments[j][1] != 0.0:
                fid = self.assignments[j][0]
                labels.append("linear" if fid == 4 else "nonlinear")
            else:
                labels.append("zero")
        return tuple(labels)


@dataclass(frozen=True)
class GeneratedData:
    """One synthetic draw: design, response and the ground truth."""

    X: np.ndarray              # n x p
    y: np.ndarray              # n
    contributions: np.ndarray  # n x p, true per-feature f_j(x_ij)
    labels: tuple              # per-feature truth class
    spec: SyntheticSpec


def generate(spec: SyntheticSpec, rng) -> GeneratedData:
    """Draw one dataset.  Draw order is fixed (design entries, then the
    shared-factor column for correlated designs, then the noise) so that a
    seeded generator reproduces byte-identical data."""
    if isinstance(rng, (int, list, tuple)):
        rng = np.random.default_rng(rng)
    n, p = spec.n, spec.p
    if spec.marginal == "uniform":
        X = rng.uniform(-1.0, 1.0, size=(n, p))
    else:
        X = np.sqrt(1.0 - spec.rho) * rng.standard_normal((n, p))
        X += np.sqrt(spec.rho) * rng.standard_normal((n, 1))
    contributions = np.zeros((n, p))
    for j, (fid, mult) in spec.assignments.items():
        contributions[:, j - 1] = mult * component_function(fid, X[:, j - 1])
    noise = rng.standard_normal(n) * np.sqrt(spec.sigma2)
    y = contributions.sum(axis=1) + noise
    return GeneratedData(X, y, contributions, spec.truth_labels(), spec)


def dataset_from_matrix(X: np.ndarray, y: np.ndarray, knot_count: int = 10) -> Dataset:
    """Wrap a plain design matrix and response as a Dataset (columns
    ``x01``.. zero-padded, response ``y``)."""
    n, p = X.shape
    width = len(str(p))
    names = [f"x{j + 1:0{width}d}" for j in range(p)]
    columns = {name: np.array(X[:, j]) for j, name in enumerate(names)}
    columns["y"] = np.asarray(y, dtype=float)
    specs = {name: ColumnSpec(name, role="numeric", knot_count=knot_count)
             for name in names}
    specs["y"] = ColumnSpec("y", role="response")
    return Dataset(names=tuple(names) + ("y",), columns=columns,
                   specs=specs, response="y")


@dataclass(frozen=True)
class MetricReport:
    in_sample_mse: float
    fdr: float
    tpr: float
    confusion: np.ndarray  # rows: truth, cols: predicted, order CLASSES


def evaluate(result: FitResult, truth: GeneratedData, design: Design) -> MetricReport:
    """Score a fitted model against the generating truth (training rows)."""
    p = truth.spec.p
    if len(design.numeric) != p:
        raise ValueError(
            f"design has {len(design.numeric)} features, truth has {p}"
        )
    n = truth.X.shape[0]
    total = 0.0
    for j in range(p):
        fhat = np.zeros(n)
        st_nl = result.blocks[j]
        if st_nl.r2 != 0.0:
            fhat += design.terms[j].Z @ st_nl.mu
        st_lin = result.blocks[p + j]
        if st_lin.r2 != 0.0:
            fhat += design.terms[p + j].Z[:, 0] * st_lin.mu[0]
        f_true = truth.contributions[:, j]
        diff = (fhat - fhat.mean()) - (f_true - f_true.mean())
        total += float(diff @ diff)
    mse = total / n

    predicted = [result.classifications[feat.name] for feat in design.numeric]
    tp = fp = fn = 0
    confusion = np.zeros((3, 3), dtype=int)
    for true_lab, pred_lab in zip(truth.labels, predicted):
        confusion[CLASSES.index(true_lab), CLASSES.index(pred_lab)] += 1
        relevant = true_lab != "zero"
        selected = pred_lab != "zero"
        tp += relevant and selected
        fp += selected and not relevant
        fn += relevant and not selected
    fdr = fp / max(1, fp + tp)
    tpr = tp / (tp + fn) if (tp + fn) > 0 else 1.0
    return MetricReport(in_sample_mse=mse, fdr=float(fdr), tpr=float(tpr),
                        confusion=confusion)


# ---------------------------------------------------------------------------
# Experiment catalog (feature indices are 1-based)

def _cycle(indices, pattern):
    reps = -(-len(indices) // len(pattern))
    return {j: (fid, 1.0) for j, fid in zip(indices, pattern * reps)}


_EXPERIMENT_1 = {
    1: SyntheticSpec(n=500, p=10, sigma2=1.0,
                     assignments={2: (1, 1.0), 5: (2, 1.0), 7: (3, 1.0), 8: (4, 1.0)}),
    2: SyntheticSpec(n=800, p=15, sigma2=4.0,
                     assignments={1: (1, 1.0), 2: (1, -1.0), 3: (2, 1.0), 4: (2, -1.0),
                                  7: (3, 1.0), 11: (3, -1.0), 12: (4, 1.0), 13: (4, -1.0)}),
    3: SyntheticSpec(n=500, p=150, sigma2=1.0,
                     assignments={1: (2, 1.0), 4: (3, 1.0), 6: (4, 1.0)}),
    4: SyntheticSpec(n=1000, p=1000, sigma2=1.0,
                     assignments={10: (1, 1.0), 13: (2, 1.0), 18: (3, 1.0), 120: (4, 1.0)}),
    5: SyntheticSpec(n=500, p=30, sigma2=1.0, marginal="normal", rho=0.3,
                     assignments=_cycle((1, 3, 4, 5, 12, 20, 21, 23, 24, 25, 26, 28),
                                        (1, 2, 3, 4))),
}
_EXPERIMENT_1[6] = replace(_EXPERIMENT_1[5], rho=0.7)

_EXP2_CASE2 = {}
for _i, _mult in enumerate(np.linspace(1.0, 5.0, 25)):
    _EXP2_CASE2[_i + 1] = (1, float(_mult))
    _EXP2_CASE2[_i + 26] = (4, float(_mult))

_EXPERIMENT_2 = {
    1: SyntheticSpec(n=600, p=18, sigma2=1.0,
                     assignments={2: (1, 1.0), 3: (1, 2.0), 5: (2, 1.0), 6: (2, 2.0),
                                  8: (3, 1.0), 10: (3, 2.0),
                                  11: (4, 1.0), 12: (4, 2.0), 14: (4, 3.0),
                                  15: (4, -1.0), 17: (4, -2.0), 18: (4, -3.0)}),
    2: SyntheticSpec(n=2000, p=100, sigma2=1.0, assignments=_EXP2_CASE2),
    3: SyntheticSpec(n=1000, p=1200, sigma2=1.0,
                     assignments={12: (1, 1.0), 123: (2, 1.0), 810: (3, 1.0),
                                  90: (4, -1.0), 500: (4, -1.0), 811: (4, -1.0)}),
    4: SyntheticSpec(n=600, p=30, sigma2=1.0, marginal="normal", rho=0.3,
                     assignments={**{j: (3, 1.0) for j in range(21, 26)},
                                  **{j: (3, -1.0) for j in range(26, 31)},
                                  **{j: (4, 1.0) for j in range(11, 16)},
                                  **{j: (4, -1.0) for j in range(16, 21)}}),
}
_EXPERIMENT_2[5] = replace(_EXPERIMENT_2[4], rho=0.7)

_CATALOG = {1: _EXPERIMENT_1, 2: _EXPERIMENT_2}


def experiment_cases(experiment: int) -> tuple:
    if experiment not in _CATALOG:
        raise ValueError(f"unknown experiment {experiment!r}")
    return tuple(sorted(_CATALOG[experiment]))


def experiment_spec(experiment: int, case: int) -> SyntheticSpec:
    if experiment not in _CATALOG:
        raise ValueError(f"unknown experiment {experiment!r}")
    if case not in _CATALOG[experiment]:
        raise ValueError(f"experiment {experiment} has no case {case!r}")
    return _CATALOG[experiment][case]


# ---------------------------------------------------------------------------
# Replicated runs

@dataclass(frozen=True)
class ExperimentReport:
    experiment: int
    case: int
    replicates: int
    seed: int
    alpha_min: float
    alpha_015se: float
    header: tuple
    rows: tuple  # (label..., mean, sd) per metric

    def to_csv(self, path) -> None:
        write_csv(path, self.header, self.rows)


def _aggregate(values) -> tuple:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = 0.0 if arr.size == 1 else float(arr.std(ddof=1))
    return mean, sd


def run_experiment(experiment: int, case: int, replicates: int, seed: int,
                   config: FitConfig | None = None, folds: int = 10,
                   per_replicate_cv: bool = False) -> ExperimentReport:
    """Run one catalog case for a number of seeded replicates.

    The α grid is cross-validated on the first replicate only and the chosen
    (α_min, α_0.15se) pair is reused for the remaining replicates, unless
    ``per_replicate_cv`` asks for a fresh CV each time.  Per-replicate fits
    start from zero (no warm start across replicates).
    """
    if replicates < 1:
        raise ValueError("replicates must be positive")
    spec = experiment_spec(experiment, case)
    if config is None:
        config = FitConfig(alpha=1.0)

    alpha_min = alpha_015se = None
    reports_min = []
    reports_se = []
    for rep in range(1, replicates + 1):
        rng = np.random.default_rng([seed, rep])
        data = generate(spec, rng)
        ds = dataset_from_matrix(data.X, data.y)
        design = build_design(ds)
        if alpha_min is None or per_replicate_cv:
            grid = make_alpha_grid(design.terms, design.y)
            cv = cross_validate(ds, grid, folds=folds, seed=seed, config=config)
            alpha_min, alpha_015se = cv.alpha_min, cv.alpha_015se
        for alpha, sink in ((alpha_min, reports_min), (alpha_015se, reports_se)):
            result = fit(design.terms, design.y, replace(config, alpha=alpha),
                         layout=design.layout, intercept=design.intercept)
            sink.append(evaluate(result, data, design))

    if experiment == 1:
        header = ("metric", "mean", "sd")
        rows = []
        for name, reports in (("alpha_min", reports_min), ("alpha_015se", reports_se)):
            for metric in ("mse", "fdr", "tpr"):
                attr = "in_sample_mse" if metric == "mse" else metric
                mean, sd = _aggregate([getattr(r, attr) for r in reports])
                rows.append((f"{metric}_{name}", mean, sd))
    else:
        header = ("truth", "predicted", "mean", "sd")
        rows = []
        for ti, truth_lab in enumerate(CLASSES):
            for pi, pred_lab in enumerate(CLASSES):
                mean, sd = _aggregate([r.confusion[ti, pi] for r in reports_se])
                rows.append((truth_lab, pred_lab, mean, sd))

    return ExperimentReport(
        experiment=experiment, case=case, replicates=replicates, seed=seed,
        alpha_min=float(alpha_min), alpha_015se=float(alpha_015se),
        header=header, rows=tuple(rows),
    )
