"""Natural cubic spline basis with an exact curvature penalty.

A feature x gets one linear column (x minus its training mean) plus a bundle
of nonlinear columns spanning the natural cubic splines on a set of knots.
The nonlinear columns are built as differences of truncated cubics,

    d_k(x) = [(x - t_k)_+^3 - (x - t_K)_+^3] / (t_K - t_k),
    h_k(x) = d_k(x) - d_{K-1}(x),          k = 1, .., K-2,

which are zero left of the first knot and exactly linear right of the last
one, so together with {1, x} they span the K-dimensional natural-spline
space and extrapolate linearly on both sides.

Each h_k has a continuous, piecewise-linear second derivative supported on
[t_1, t_K].  The roughness penalty S with entries

    S[i, j] = integral of h_i''(x) h_j''(x) dx over [t_1, t_K]

therefore has a piecewise-quadratic integrand and is computed exactly by
Simpson's rule on each inter-knot interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFeatureError

__all__ = [
    "RawBasis",
    "place_knots",
    "natural_cubic_basis",
    "penalty_matrix",
    "integrate_curvature_products",
]


def place_knots(x: np.ndarray, count: int) -> np.ndarray:
    """Choose knots as empirical quantiles at probabilities i/(count-1).

    Tied quantiles (heavily repeated data values) are deduplicated; the
    basis then simply has fewer knots.  Fewer than 3 surviving knots means
    the feature cannot carry a spline at all.

    Parameters
    ----------
    x : array_like, shape (n,)
        Raw feature values.
    count : int
        Number of quantile probes, >= 3 and <= n.

    Returns
    -------
    ndarray
        Strictly increasing knot locations, length K with 3 <= K <= count.
    """
    x = np.asarray(x, dtype=float)
    if count < 3:
        raise DegenerateFeatureError(f"need at least 3 knots, requested {count}")
    if x.ndim != 1 or x.size < count:
        raise DegenerateFeatureError(
            f"need at least {count} observations to place {count} knots, got {x.size}"
        )
    if not np.all(np.isfinite(x)):
        raise DegenerateFeatureError("non-finite values in feature")
    if np.unique(x).size < count:
        raise DegenerateFeatureError(
            f"feature has fewer than {count} distinct values"
        )
    probs = np.arange(count, dtype=float) / (count - 1)
    knots = np.unique(np.quantile(x, probs))
    if knots.size < 3:
        raise DegenerateFeatureError(
            f"only {knots.size} distinct quantile knots; need at least 3"
        )
    return knots


def _truncated_cubic_columns(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Uncentered nonlinear columns h_k(x), shape (n, K-2)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(knots, dtype=float)
    K = t.size
    cube_last = np.maximum(x - t[K - 1], 0.0) ** 3

    def d(k):
        return (np.maximum(x - t[k], 0.0) ** 3 - cube_last) / (t[K - 1] - t[k])

    d_ref = d(K - 2)
    cols = np.empty((x.size, K - 2))
    for k in range(K - 2):
        cols[:, k] = d(k) - d_ref
    return cols


def _curvature_columns(x: np.ndarray, knots: np.ndarray) -> np.ndarray:
    """Second derivatives h_k''(x), shape (n, K-2).  Piecewise linear."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(knots, dtype=float)
    K = t.size
    ramp_last = np.maximum(x - t[K - 1], 0.0)

    def d2(k):
        return 6.0 * (np.maximum(x - t[k], 0.0) - ramp_last) / (t[K - 1] - t[k])

    d2_ref = d2(K - 2)
    cols = np.empty((x.size, K - 2))
    for k in range(K - 2):
        cols[:, k] = d2(k) - d2_ref
    return cols


@dataclass(frozen=True)
class RawBasis:
    """A fitted spline expansion: the training matrix plus everything needed
    to evaluate the identical basis functions at new points.

    Attributes
    ----------
    H : ndarray, shape (n, K-2)
        Training-time nonlinear columns, centered (column means zero).
    knots : ndarray
        Strictly increasing knot locations.
    col_means : ndarray
        Training means subtracted from the raw truncated-cubic columns.
    x_mean : float
        Training mean of the feature, subtracted from the linear column.
    """

    H: np.ndarray
    knots: np.ndarray
    col_means: np.ndarray
    x_mean: float

    @property
    def width(self) -> int:
        return self.knots.size - 2

    def evaluate(self, x) -> np.ndarray:
        """Nonlinear columns at new points, centered by the training means."""
        return _truncated_cubic_columns(np.asarray(x, dtype=float), self.knots) - self.col_means

    def linear(self, x) -> np.ndarray:
        """Linear column at new points, centered by the training mean."""
        return np.asarray(x, dtype=float) - self.x_mean

    def curvature(self, x) -> np.ndarray:
        """Second derivatives of the basis functions (centering-invariant)."""
        return _curvature_columns(np.asarray(x, dtype=float), self.knots)


def natural_cubic_basis(knots: np.ndarray, x: np.ndarray) -> RawBasis:
    """Build the centered natural cubic spline bundle for one feature.

    Parameters
    ----------
    knots : ndarray
        Strictly increasing, length K >= 3 (typically from ``place_knots``).
    x : array_like, shape (n,)
        Training values of the feature.

    Returns
    -------
    RawBasis
        Matrix of K-2 centered nonlinear columns plus the evaluation recipe.
    """
    knots = np.asarray(knots, dtype=float)
    if knots.size < 3 or np.any(np.diff(knots) <= 0):
        raise DegenerateFeatureError("knots must be strictly increasing, length >= 3")
    x = np.asarray(x, dtype=float)
    raw = _truncated_cubic_columns(x, knots)
    col_means = raw.mean(axis=0)
    return RawBasis(
        H=raw - col_means,
        knots=knots,
        col_means=col_means,
        x_mean=float(x.mean()),
    )


def integrate_curvature_products(breakpoints: np.ndarray, curvature) -> np.ndarray:
    """Exact Gram matrix of functions with piecewise-linear ``curvature``.

    ``curvature`` maps an (m,) point array to an (m, d) matrix of second
    derivatives; it must be linear within each interval of ``breakpoints``
    and zero outside [breakpoints[0], breakpoints[-1]].  Products of such
    functions are piecewise quadratic, for which per-interval Simpson is
    exact.
    """
    b = np.asarray(breakpoints, dtype=float)
    lo, hi = b[:-1], b[1:]
    mid = 0.5 * (lo + hi)
    p_lo = np.asarray(curvature(lo), dtype=float)
    p_mid = np.asarray(curvature(mid), dtype=float)
    p_hi = np.asarray(curvature(hi), dtype=float)
    w = (hi - lo) / 6.0
    S = (
        p_lo.T @ (w[:, None] * p_lo)
        + p_mid.T @ (4.0 * w[:, None] * p_mid)
        + p_hi.T @ (w[:, None] * p_hi)
    )
    return 0.5 * (S + S.T)


def penalty_matrix(basis: RawBasis) -> np.ndarray:
    """Roughness penalty S[i,j] = integral h_i'' h_j'' for a spline bundle."""
    return integrate_curvature_products(basis.knots, basis.curvature)
