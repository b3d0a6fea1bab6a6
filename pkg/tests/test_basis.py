"""Spline basis construction: quantile knots, natural boundary behavior,
span reproduction against scipy's natural cubic interpolant, and the exact
curvature penalty against adaptive quadrature."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from vard.basis import (
    RawBasis,
    integrate_curvature_products,
    natural_cubic_basis,
    penalty_matrix,
    place_knots,
)
from vard.errors import DegenerateFeatureError


# ---------------------------------------------------------------------------
# place_knots

def test_knots_of_even_grid():
    knots = place_knots(np.array([0.0, 0.25, 0.5, 0.75, 1.0]), 3)
    assert_allclose(knots, [0.0, 0.5, 1.0])


def test_knots_are_quantiles():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(400)
    knots = place_knots(x, 7)
    assert_allclose(knots, np.quantile(x, np.arange(7) / 6.0))


def test_knots_strictly_increasing_and_span():
    rng = np.random.default_rng(11)
    x = rng.uniform(-1.0, 1.0, size=500)
    knots = place_knots(x, 25)
    assert knots.size == 25
    assert np.all(np.diff(knots) > 0)
    assert knots[0] == x.min() and knots[-1] == x.max()
    assert knots[0] > -1.0 and knots[-1] < 1.0


def test_knots_too_few_distinct_values():
    with pytest.raises(DegenerateFeatureError):
        place_knots(np.array([1.0, 1.0, 1.0, 2.0]), 3)


def test_knots_dedupes_tied_quantiles():
    # 80% zeros: low quantiles all collapse onto 0
    x = np.concatenate([np.zeros(80), np.linspace(1.0, 5.0, 20)])
    knots = place_knots(x, 10)
    assert knots.size < 10
    assert knots.size >= 3
    assert np.all(np.diff(knots) > 0)


def test_knots_input_validation():
    with pytest.raises(DegenerateFeatureError):
        place_knots(np.arange(10.0), 2)           # too few knots
    with pytest.raises(DegenerateFeatureError):
        place_knots(np.arange(4.0), 5)            # more knots than points
    with pytest.raises(DegenerateFeatureError):
        place_knots(np.array([0.0, 1.0, np.nan, 3.0]), 3)


# ---------------------------------------------------------------------------
# natural_cubic_basis

def test_width_is_knots_minus_two():
    x = np.linspace(0.0, 1.0, 40)
    for K in (3, 5, 10):
        basis = natural_cubic_basis(np.linspace(0.0, 1.0, K), x)
        assert basis.width == K - 2
        assert basis.H.shape == (40, K - 2)


def test_columns_centered():
    rng = np.random.default_rng(3)
    x = rng.uniform(-2.0, 3.0, size=200)
    basis = natural_cubic_basis(place_knots(x, 10), x)
    norms = np.linalg.norm(basis.H, axis=0)
    assert np.all(np.abs(basis.H.mean(axis=0)) <= 1e-12 * np.maximum(norms, 1.0))
    assert abs(np.mean(basis.linear(x))) <= 1e-12 * max(np.linalg.norm(x), 1.0)


def test_linear_beyond_boundaries():
    """Second differences of every basis column vanish outside the knots."""
    rng = np.random.default_rng(9)
    x = rng.standard_normal(100)
    basis = natural_cubic_basis(place_knots(x, 8), x)
    t0, tK = basis.knots[0], basis.knots[-1]
    delta = 0.37
    for start in (tK + 0.5, tK + 2.0, t0 - 3.0, t0 - 0.5 - 3 * delta):
        pts = start + delta * np.arange(5)
        pts = pts[(pts <= t0) | (pts >= tK)]
        if pts.size < 3:
            continue
        vals = basis.evaluate(pts)
        second = np.diff(vals, n=2, axis=0)
        assert np.max(np.abs(second)) <= 1e-9 * (1.0 + np.max(np.abs(vals)))


def test_zero_left_of_first_knot_before_centering():
    knots = np.array([0.0, 0.4, 0.7, 1.0])
    x = np.linspace(0.0, 1.0, 30)
    basis = natural_cubic_basis(knots, x)
    left = basis.evaluate(np.array([-5.0, -1.0, 0.0]))
    # centered columns are constant (= -col_means) left of the first knot
    assert_allclose(left, np.broadcast_to(-basis.col_means, left.shape), atol=1e-12)


def test_span_reproduces_natural_cubic_spline():
    """{1, x} + nonlinear columns reproduce scipy's natural interpolant."""
    rng = np.random.default_rng(17)
    knots = np.sort(rng.uniform(-1.0, 2.0, size=9))
    values = rng.standard_normal(9)
    oracle = CubicSpline(knots, values, bc_type="natural")

    grid = np.linspace(knots[0], knots[-1], 457)
    basis = natural_cubic_basis(knots, grid)
    design = np.column_stack([np.ones(grid.size), basis.linear(grid), basis.H])
    target = oracle(grid)
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(values)


def test_evaluate_matches_training_matrix():
    rng = np.random.default_rng(23)
    x = rng.uniform(0.0, 10.0, size=60)
    basis = natural_cubic_basis(place_knots(x, 6), x)
    assert_allclose(basis.evaluate(x), basis.H, atol=1e-12)
    assert_allclose(basis.linear(x), x - x.mean(), atol=1e-12)


# ---------------------------------------------------------------------------
# curvature and penalty

def test_curvature_matches_finite_differences():
    rng = np.random.default_rng(31)
    knots = np.sort(rng.uniform(0.0, 1.0, size=6))
    x = rng.uniform(knots[0], knots[-1], size=50)
    basis = natural_cubic_basis(knots, np.linspace(0, 1, 20))
    h = 1e-5
    fd = (basis.evaluate(x + h) - 2 * basis.evaluate(x) + basis.evaluate(x - h)) / h**2
    assert_allclose(basis.curvature(x), fd, rtol=1e-4, atol=1e-3)


def test_penalty_constant_curvature_segment():
    # single function with h'' = c on [a, b]: integral of (h'')^2 is c^2 (b-a)
    a, b, c = 0.5, 2.0, 3.0

    def curvature(pts):
        pts = np.asarray(pts)
        return np.where((pts >= a) & (pts <= b), c, 0.0)[:, None]

    S = integrate_curvature_products(np.array([a, b]), curvature)
    assert_allclose(S, [[c**2 * (b - a)]])


def test_penalty_zero_curvature_column():
    # a globally linear function contributes a zero row/column
    def curvature(pts):
        pts = np.asarray(pts, dtype=float)
        return np.column_stack([pts, np.zeros_like(pts)])

    S = integrate_curvature_products(np.array([0.0, 1.0]), curvature)
    assert S[0, 1] == 0.0 and S[1, 0] == 0.0 and S[1, 1] == 0.0
    assert_allclose(S[0, 0], 1.0 / 3.0)  # integral of x^2 on [0, 1]


def test_penalty_matrix_symmetric_psd():
    rng = np.random.default_rng(41)
    x = rng.standard_normal(300)
    basis = natural_cubic_basis(place_knots(x, 10), x)
    S = penalty_matrix(basis)
    assert_allclose(S, S.T, rtol=1e-10)
    eigvals = np.linalg.eigvalsh(S)
    assert eigvals.min() >= -1e-10 * eigvals.max()


def test_penalty_matrix_against_quadrature():
    """Every entry of S agrees with adaptive quadrature of h_i'' h_j''."""
    rng = np.random.default_rng(43)
    x = rng.uniform(-3.0, 3.0, size=200)
    knots = place_knots(x, 10)
    basis = natural_cubic_basis(knots, x)
    S = penalty_matrix(basis)
    d = basis.width

    for i in range(d):
        for j in range(i, d):
            val, err = quad(
                lambda t: basis.curvature(np.array([t]))[0, i]
                * basis.curvature(np.array([t]))[0, j],
                knots[0], knots[-1], points=list(knots), limit=200,
            )
            assert abs(S[i, j] - val) <= 1e-8 * max(1.0, abs(val)), (i, j)


def test_penalty_quadratic_form_is_roughness():
    """beta' S beta equals the integrated squared curvature of the spline
    the coefficients describe (scipy interpolant as the oracle)."""
    rng = np.random.default_rng(47)
    knots = np.sort(rng.uniform(0.0, 4.0, size=8))
    values = rng.standard_normal(8)
    oracle = CubicSpline(knots, values, bc_type="natural")

    grid = np.linspace(knots[0], knots[-1], 601)
    basis = natural_cubic_basis(knots, grid)
    design = np.column_stack([np.ones(grid.size), basis.linear(grid), basis.H])
    coef, *_ = np.linalg.lstsq(design, oracle(grid), rcond=None)
    beta = coef[2:]

    S = penalty_matrix(basis)
    roughness, _ = quad(lambda t: float(oracle(t, 2)) ** 2,
                        knots[0], knots[-1], points=list(knots), limit=200)
    assert_allclose(beta @ S @ beta, roughness, rtol=1e-6)


def test_basis_rejects_bad_knots():
    x = np.linspace(0, 1, 10)
    with pytest.raises(DegenerateFeatureError):
        natural_cubic_basis(np.array([0.0, 0.0, 1.0]), x)
    with pytest.raises(DegenerateFeatureError):
        natural_cubic_basis(np.array([0.0, 1.0]), x)


def test_rawbasis_roundtrip_fields():
    x = np.linspace(0, 1, 25)
    basis = natural_cubic_basis(np.array([0.0, 0.3, 0.8, 1.0]), x)
    clone = RawBasis(H=basis.H, knots=basis.knots,
                     col_means=basis.col_means, x_mean=basis.x_mean)
    pts = np.array([0.1, 0.9, 1.5])
    assert_allclose(clone.evaluate(pts), basis.evaluate(pts))
