"""Regularization-path and cross-validation machinery.

The alpha grid is anchored at ``alpha_max`` — the smallest strength whose
zero-initialized fit stays empty — and spans a fixed number of decades
below it, log-evenly.  Paths are fit in ascending alpha with each fit
warm-started from the previous converged means.

Cross-validation rebuilds the *entire* preprocessing pipeline (knots, basis,
standardization, response centering) inside every training fold, so no
held-out statistic leaks into the transforms.  Two alphas are selected from
the mean CV curve: the argmin (ties toward larger alpha) and the largest
alpha whose mean stays within ``se_factor`` (default 0.15) spreads of the
minimum, where the spread is the fold-MSE standard deviation at the argmin
(``spread="sem"`` switches to the standard error of the mean).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._parallel import parallel_map
from .data import Dataset, build_design
from .errors import DegenerateFeatureError, DegenerateFoldError
from .solver import FitConfig, alpha_max, fit

__all__ = [
    "AlphaGrid",
    "CvResult",
    "make_alpha_grid",
    "path_fit",
    "kfold_split",
    "cross_validate",
]


@dataclass(frozen=True)
class AlphaGrid:
    """Strictly increasing alpha values; the last one exceeds alpha_max."""

    values: np.ndarray
    alpha_max: float
    span_decades: float

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return float(self.values[i])


def make_alpha_grid(terms, y, count: int = 100, span_decades: float = 6.0) -> AlphaGrid:
    """Log-even grid from alpha_max*10^-span_decades to alpha_max*1.001."""
    if count < 2:
        raise ValueError(f"grid needs at least 2 points, got {count}")
    am = alpha_max(terms, y)
    if not (am > 0.0) or not np.isfinite(am):
        raise ValueError(
            "alpha_max is zero or non-finite (response carries no signal on any block)"
        )
    values = np.geomspace(am * 10.0 ** (-span_decades), am * 1.001, count)
    return AlphaGrid(values=values, alpha_max=am, span_decades=float(span_decades))


def path_fit(terms, y, grid: AlphaGrid, config: FitConfig,
             layout=None, intercept: float = 0.0):
    """Fit every grid alpha in ascending order with warm starts.

    Returns the FitResults in grid order.  ``config.alpha`` is ignored.
    """
    results = []
    init_mu = None
    for a in grid.values:
        res = fit(terms, y, replace(config, alpha=float(a)),
                  init_mu=init_mu, layout=layout, intercept=intercept)
        results.append(res)
        init_mu = [st.mu for st in res.blocks]
    return results


def kfold_split(n: int, folds: int, seed: int):
    """Seeded shuffle then contiguous chunks; sizes differ by at most one.

    Returns a list of ``folds`` index arrays partitioning range(n).
    """
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > n:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


@dataclass(frozen=True)
class CvResult:
    alphas: np.ndarray
    mean_mse: np.ndarray
    sd_mse: np.ndarray
    fold_mse: np.ndarray  # (n_alpha, folds)
    folds: int
    seed: int
    alpha_min: float
    alpha_015se: float
    index_min: int
    index_015se: int


def _fold_mse(args):
    ds, train_idx, test_idx, grid, config = args
    try:
        design = build_design(ds.subset(train_idx))
    except DegenerateFeatureError as exc:
        raise DegenerateFoldError(f"training fold cannot be preprocessed: {exc}") from exc
    results = path_fit(design.terms, design.y, grid, config,
                       layout=design.layout, intercept=design.intercept)
    ds_test = ds.subset(test_idx)
    Z_test = np.hstack(design.matrices_for(ds_test))
    y_test = ds_test.columns[ds.response]
    out = np.empty(len(grid))
    for i, res in enumerate(results):
        mu_all = np.concatenate([st.mu for st in res.blocks])
        yhat = design.intercept + Z_test @ mu_all
        out[i] = float(np.mean((y_test - yhat) ** 2))
    return out


def cross_validate(ds: Dataset, grid: AlphaGrid, folds: int, seed: int,
                   config: FitConfig, se_factor: float = 0.15,
                   spread: str = "sd") -> CvResult:
    """K-fold CV of the whole pipeline over an alpha grid.

    Each fold re-runs preprocessing on its training rows only, path-fits
    ascending alpha, and scores held-out MSE per alpha.
    """
    if spread not in ("sd", "sem"):
        raise ValueError(f"spread must be 'sd' or 'sem', got {spread!r}")
    splits = kfold_split(ds.n, folds, seed)
    tasks = []
    for f, test_idx in enumerate(splits):
        train_idx = np.sort(np.concatenate([s for g, s in enumerate(splits) if g != f]))
        tasks.append((ds, train_idx, np.sort(test_idx), grid, config))
    per_fold = parallel_map(_fold_mse, tasks)

    fold_mse = np.column_stack(per_fold)  # (n_alpha, folds)
    mean = fold_mse.mean(axis=1)
    sd = fold_mse.std(axis=1, ddof=1)
    # argmin with ties toward the larger (sparser) alpha
    i_min = int(len(mean) - 1 - np.argmin(mean[::-1]))
    spread_val = sd[i_min] if spread == "sd" else sd[i_min] / np.sqrt(folds)
    threshold = mean[i_min] + se_factor * spread_val
    i_se = int(np.max(np.nonzero(mean <= threshold)[0]))
    return CvResult(
        alphas=grid.values.copy(),
        mean_mse=mean,
        sd_mse=sd,
        fold_mse=fold_mse,
        folds=folds,
        seed=seed,
        alpha_min=float(grid.values[i_min]),
        alpha_015se=float(grid.values[i_se]),
        index_min=i_min,
        index_015se=i_se,
    )
