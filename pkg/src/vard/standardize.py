"""Per-feature standardization of spline bundles.

The solver wants each nonlinear bundle in coordinates where three things
hold at once: the bundle is orthogonal to its own linear column, the
roughness penalty is the identity, and the Gram matrix is diagonal.  That
is achieved by a three-step linear map of the centered basis columns:

1. subtract from each column its projection onto the centered feature;
2. multiply by the inverse symmetric square root of the penalty S;
3. rotate onto the eigenvectors of the resulting Gram matrix.

None of the steps changes the spanned function space (step 1 shifts spline
columns by multiples of the linear column, which the model carries
separately), so predictions are unaffected while every block update becomes
a closed-form univariate problem.  The composed map is recorded so the same
coordinates can be reproduced at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import RawBasis
from .errors import DegenerateFeatureError, IllConditionedPenaltyError

__all__ = [
    "StandardizedTerm",
    "orthogonalize_to_linear",
    "whiten_by_penalty",
    "diagonalize_gram",
    "standardize_term",
    "linear_term",
    "apply_transform",
]

# Relative floor below which a Gram eigenvalue is snapped to exact zero;
# the solver keys sparsity decisions on v == 0, so near-null directions
# must not leak tiny positive values.
_GRAM_EIGENVALUE_REL_FLOOR = 1e-12


@dataclass(frozen=True)
class StandardizedTerm:
    """One coefficient block in solver-ready coordinates.

    Attributes
    ----------
    Z : ndarray, shape (n, d)
        Design columns; mutually orthogonal, orthogonal to the feature's
        linear column (for nonlinear bundles).
    v : ndarray, shape (d,)
        Gram eigenvalues (squared column norms), descending; exact zeros
        mark nullspace directions excluded from updates.
    kind : str
        "nonlinear", "linear" or "level".
    label : str
        Human-readable block name, e.g. "rm:nl", "rm:lin", "rad=24".
    proj : ndarray or None
        Per-column projection coefficients onto the centered linear column
        (step 1), recorded for prediction; None for d=1 blocks.
    whiten : ndarray or None
        Inverse-square-root penalty map (step 2), possibly rectangular when
        null penalty directions were dropped.
    rotate : ndarray or None
        Gram eigenvector rotation (step 3).
    """

    Z: np.ndarray
    v: np.ndarray
    kind: str
    label: str
    proj: np.ndarray | None = None
    whiten: np.ndarray | None = None
    rotate: np.ndarray | None = None

    @property
    def d(self) -> int:
        return self.Z.shape[1]


def orthogonalize_to_linear(H: np.ndarray, x: np.ndarray):
    """Remove each column's projection onto the (centered) feature column.

    Returns the adjusted matrix and the projection coefficients
    c_k = <x, h_k> / ||x||^2 needed to replay the step on new data.
    """
    x = np.asarray(x, dtype=float)
    nrm2 = float(x @ x)
    if nrm2 <= 0.0:
        raise DegenerateFeatureError("linear column has zero norm; cannot orthogonalize")
    coef = (H.T @ x) / nrm2
    return H - np.outer(x, coef), coef


def whiten_by_penalty(H: np.ndarray, S: np.ndarray, on_low: str = "raise"):
    """Map the bundle so its roughness penalty becomes the identity.

    Uses the symmetric eigendecomposition S = Q diag(w) Q^T.  Eigenvalues
    at or below the floor 1e-10 * trace(S)/d either raise (default) or drop
    the offending directions, shrinking the bundle width.

    Returns the mapped matrix and the applied map W (H_out = H @ W).
    """
    S = np.asarray(S, dtype=float)
    d = S.shape[0]
    w, Q = np.linalg.eigh(0.5 * (S + S.T))
    floor = 1e-10 * np.trace(S) / d
    low = w <= floor
    if low.any():
        if on_low == "raise":
            raise IllConditionedPenaltyError(
                f"penalty eigenvalue {w[low].min():.3e} at or below floor {floor:.3e}"
            )
        if on_low != "drop":
            raise ValueError(f"on_low must be 'raise' or 'drop', got {on_low!r}")
        keep = ~low
        W = Q[:, keep] * w[keep] ** -0.5
    else:
        W = (Q * w**-0.5) @ Q.T  # symmetric S^{-1/2}
    return H @ W, W


def diagonalize_gram(H: np.ndarray):
    """Rotate onto the Gram eigenbasis: Z = H U with Z^T Z diagonal.

    Eigenvalues are returned in descending order; each eigenvector's sign is
    fixed so its first non-negligible entry is positive.  Eigenvalues below
    1e-12 of the largest (or negative, from rounding) are snapped to 0.0.

    Returns (Z, U, v).
    """
    G = H.T @ H
    w, U = np.linalg.eigh(0.5 * (G + G.T))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    U = U[:, order]
    top = max(float(w[0]), 0.0) if w.size else 0.0
    w = np.where(w <= top * _GRAM_EIGENVALUE_REL_FLOOR, 0.0, w)
    for k in range(U.shape[1]):
        col = U[:, k]
        nz = np.nonzero(np.abs(col) > 1e-9 * np.abs(col).max())[0]
        if nz.size and col[nz[0]] < 0:
            U[:, k] = -col
    return H @ U, U, w


def standardize_term(x: np.ndarray, basis: RawBasis, S: np.ndarray, label: str = "x") -> StandardizedTerm:
    """Run the full pipeline on one feature's nonlinear bundle.

    Parameters
    ----------
    x : array_like, shape (n,)
        Raw feature values (the same ones the basis was fitted on).
    basis : RawBasis
        Centered spline bundle for the feature.
    S : ndarray
        Roughness penalty of the bundle (from ``penalty_matrix``).
    label : str
        Block label for reporting.
    """
    xc = basis.linear(x)
    H1, coef = orthogonalize_to_linear(basis.H, xc)
    H2, W = whiten_by_penalty(H1, S, on_low="drop")
    Z, U, v = diagonalize_gram(H2)
    return StandardizedTerm(
        Z=Z, v=v, kind="nonlinear", label=label, proj=coef, whiten=W, rotate=U
    )


def linear_term(x_centered: np.ndarray, label: str, kind: str = "linear") -> StandardizedTerm:
    """Wrap a single centered column as a d=1 block."""
    z = np.asarray(x_centered, dtype=float).reshape(-1, 1)
    v = np.array([float(z[:, 0] @ z[:, 0])])
    return StandardizedTerm(Z=z, v=v, kind=kind, label=label)


def apply_transform(term: StandardizedTerm, H_new: np.ndarray, x_new_centered: np.ndarray) -> np.ndarray:
    """Reproduce a nonlinear block's coordinates at new data points.

    ``H_new`` must come from the same RawBasis (training-centered columns)
    and ``x_new_centered`` from its ``linear`` method.
    """
    if term.proj is None or term.whiten is None or term.rotate is None:
        raise ValueError("term does not carry a nonlinear transform record")
    H1 = H_new - np.outer(np.asarray(x_new_centered, dtype=float), term.proj)
    return H1 @ term.whiten @ term.rotate
