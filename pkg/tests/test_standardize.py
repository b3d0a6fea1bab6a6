"""Per-feature standardization pipeline: orthogonality to the linear
column, penalty whitening, Gram diagonalization, span preservation and the
prediction-time transform replay."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vard.basis import natural_cubic_basis, penalty_matrix, place_knots
from vard.errors import DegenerateFeatureError, IllConditionedPenaltyError
from vard.standardize import (
    apply_transform,
    diagonalize_gram,
    linear_term,
    orthogonalize_to_linear,
    standardize_term,
    whiten_by_penalty,
)


def _random_feature(rng, n=150, knot_count=8):
    x = rng.uniform(-2.0, 2.0, size=n)
    basis = natural_cubic_basis(place_knots(x, knot_count), x)
    return x, basis, penalty_matrix(basis)


# ---------------------------------------------------------------------------
# orthogonalize_to_linear

def test_orthogonalize_no_op_when_already_orthogonal():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(60)
    H = rng.standard_normal((60, 3))
    H -= np.outer(x, (H.T @ x) / (x @ x))  # pre-orthogonalize
    H2, coef = orthogonalize_to_linear(H, x)
    assert_allclose(coef, 0.0, atol=1e-14)
    assert_allclose(H2, H, atol=1e-14)


def test_orthogonalize_kills_copy_of_x():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(40)
    H2, coef = orthogonalize_to_linear(x[:, None].copy(), x)
    assert_allclose(coef, [1.0])
    assert_allclose(H2, 0.0, atol=1e-12)


def test_orthogonalize_random_case_cosines():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(50)
    H = rng.standard_normal((50, 4))
    H2, _ = orthogonalize_to_linear(H, x)
    cos = (H2.T @ x) / (np.linalg.norm(x) * np.linalg.norm(H2, axis=0))
    assert np.max(np.abs(cos)) <= 1e-10


def test_orthogonalize_zero_x_raises():
    with pytest.raises(DegenerateFeatureError):
        orthogonalize_to_linear(np.ones((5, 2)), np.zeros(5))


# ---------------------------------------------------------------------------
# whiten_by_penalty

def test_whiten_identity_penalty_is_noop():
    rng = np.random.default_rng(3)
    H = rng.standard_normal((30, 4))
    H2, W = whiten_by_penalty(H, np.eye(4))
    assert_allclose(W, np.eye(4), atol=1e-12)
    assert_allclose(H2, H, atol=1e-12)


def test_whiten_diagonal_penalty_rescales_columns():
    rng = np.random.default_rng(4)
    H = rng.standard_normal((30, 2))
    H2, W = whiten_by_penalty(H, np.diag([4.0, 9.0]))
    assert_allclose(H2, H * np.array([0.5, 1.0 / 3.0]), rtol=1e-12)
    assert_allclose(W, np.diag([0.5, 1.0 / 3.0]), atol=1e-12)


def test_whiten_makes_penalty_identity():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6))
    S = A @ A.T + 0.5 * np.eye(6)
    H = rng.standard_normal((40, 6))
    _, W = whiten_by_penalty(H, S)
    assert_allclose(W.T @ S @ W, np.eye(6), atol=1e-10)


def test_whiten_low_eigenvalue_raises_by_default():
    S = np.diag([1.0, 1e-14])
    with pytest.raises(IllConditionedPenaltyError):
        whiten_by_penalty(np.ones((10, 2)), S)


def test_whiten_drop_mode_shrinks_width():
    rng = np.random.default_rng(6)
    S = np.diag([2.0, 1e-14, 3.0])
    H = rng.standard_normal((20, 3))
    H2, W = whiten_by_penalty(H, S, on_low="drop")
    assert H2.shape == (20, 2)
    assert_allclose(W.T @ S @ W, np.eye(2), atol=1e-10)


# ---------------------------------------------------------------------------
# diagonalize_gram

def test_diagonalize_already_diagonal():
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.standard_normal((50, 3)))
    H = Q * np.array([3.0, 1.0, 2.0])  # orthogonal cols, norms 3, 1, 2
    Z, U, v = diagonalize_gram(H)
    assert_allclose(v, [9.0, 4.0, 1.0], rtol=1e-12)
    # U is a signed permutation
    assert_allclose(np.abs(U), np.abs(U).round(), atol=1e-10)
    assert_allclose(U.T @ U, np.eye(3), atol=1e-12)


def test_diagonalize_gram_is_diagonal():
    rng = np.random.default_rng(8)
    H = rng.standard_normal((100, 5))
    Z, U, v = diagonalize_gram(H)
    G = Z.T @ Z
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) <= 1e-8 * v.max()
    assert_allclose(np.diag(G), v, rtol=1e-9)
    assert np.all(np.diff(v) <= 0)  # descending


def test_diagonalize_rank_deficient_duplicate_columns():
    rng = np.random.default_rng(9)
    col = rng.standard_normal(80)
    H = np.column_stack([col, col, rng.standard_normal(80)])
    Z, U, v = diagonalize_gram(H)
    assert np.sum(v == 0.0) == 1  # exact zero, not merely tiny
    assert np.all(v >= 0.0)


def test_diagonalize_sign_convention_deterministic():
    rng = np.random.default_rng(10)
    H = rng.standard_normal((60, 4))
    Z1, U1, v1 = diagonalize_gram(H)
    Z2, U2, v2 = diagonalize_gram(H.copy())
    assert_allclose(U1, U2)
    for k in range(4):
        col = U1[:, k]
        nz = np.nonzero(np.abs(col) > 1e-9 * np.abs(col).max())[0]
        assert col[nz[0]] > 0


# ---------------------------------------------------------------------------
# standardize_term: the full pipeline

def test_pipeline_invariants_random_features():
    rng = np.random.default_rng(11)
    for _ in range(10):
        x, basis, S = _random_feature(rng)
        term = standardize_term(x, basis, S)
        xc = basis.linear(x)

        # orthogonal to the feature's own linear column
        assert np.max(np.abs(term.Z.T @ xc)) <= 1e-8 * np.linalg.norm(xc) * max(
            np.linalg.norm(term.Z, axis=0).max(), 1.0
        )
        # diagonal Gram matching v
        G = term.Z.T @ term.Z
        assert np.max(np.abs(G - np.diag(term.v))) <= 1e-8 * max(term.v.max(), 1.0)
        # whitened penalty is the identity
        M = term.whiten @ term.rotate
        assert_allclose(M.T @ S @ M, np.eye(term.d), atol=1e-6)


def test_pipeline_preserves_span():
    """Fitting on [x, H_raw] and on [x, Z] gives the same fitted values."""
    rng = np.random.default_rng(12)
    x, basis, S = _random_feature(rng, n=120)
    term = standardize_term(x, basis, S)
    xc = basis.linear(x)
    y = rng.standard_normal(120)

    A_raw = np.column_stack([xc, basis.H])
    A_std = np.column_stack([xc, term.Z])
    fit_raw = A_raw @ np.linalg.lstsq(A_raw, y, rcond=None)[0]
    fit_std = A_std @ np.linalg.lstsq(A_std, y, rcond=None)[0]
    assert_allclose(fit_std, fit_raw, rtol=1e-6, atol=1e-8)

    # each raw column individually lies in span{x, Z}
    Q, _ = np.linalg.qr(A_std)
    for k in range(basis.H.shape[1]):
        col = basis.H[:, k]
        resid = col - Q @ (Q.T @ col)
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(col)


def test_apply_transform_roundtrip_on_training_data():
    rng = np.random.default_rng(13)
    x, basis, S = _random_feature(rng)
    term = standardize_term(x, basis, S)
    Z_again = apply_transform(term, basis.evaluate(x), basis.linear(x))
    assert np.max(np.abs(Z_again - term.Z)) <= 1e-10 * max(1.0, np.abs(term.Z).max())


def test_apply_transform_single_point_matches_row():
    rng = np.random.default_rng(14)
    x, basis, S = _random_feature(rng)
    term = standardize_term(x, basis, S)
    i = 17
    row = apply_transform(term, basis.evaluate(x[i : i + 1]), basis.linear(x[i : i + 1]))
    assert_allclose(row[0], term.Z[i], atol=1e-10)


def test_apply_transform_requires_transform_record():
    z = linear_term(np.arange(5.0) - 2.0, "x:lin")
    with pytest.raises(ValueError):
        apply_transform(z, np.ones((5, 1)), np.zeros(5))


def test_linear_term_fields():
    xc = np.array([1.0, -1.0, 2.0, -2.0])
    term = linear_term(xc, "z:lin")
    assert term.kind == "linear" and term.d == 1
    assert_allclose(term.v, [float(xc @ xc)])
    assert_allclose(term.Z[:, 0], xc)
