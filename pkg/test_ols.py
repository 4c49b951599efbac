import numpy as np
import pytest

from errors import DegenerateResponseError, InsufficientDataError, RankDeficiencyError, ValidationError
from ols import DesignMatrix, fit_ols, predict
from synth import generate_regression_design, oracle_fit, oracle_hat_diagonal


def exact_plane(n=20, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 3, n)
    y_t = rng.uniform(0, 5, n)
    return DesignMatrix.build(1.0 + 2.0 * x + 3.0 * y_t, x=x, y_t=y_t)


def test_exact_plane_recovered():
    fit = fit_ols(exact_plane())
    np.testing.assert_allclose(fit.coefficients, [1.0, 2.0, 3.0], atol=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(fit.residuals)) <= 1e-10
    assert fit.columns == ('intercept', 'x', 'y_t')


@pytest.mark.parametrize('seed', range(100))
def test_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 51))
    design = generate_regression_design(n, seed=seed)
    fit = fit_ols(design)
    np.testing.assert_allclose(fit.coefficients, oracle_fit(design), rtol=1e-9, atol=1e-9)


def test_leverages_match_hat_matrix():
    design = generate_regression_design(40, seed=3)
    fit = fit_ols(design)
    np.testing.assert_allclose(fit.leverages, oracle_hat_diagonal(design.matrix), atol=1e-12)
    assert fit.leverages.sum() == pytest.approx(design.p)
    assert np.all((fit.leverages >= 0) & (fit.leverages <= 1 + 1e-12))


def test_xtx_inverse():
    design = generate_regression_design(30, seed=4)
    fit = fit_ols(design)
    X = design.matrix
    np.testing.assert_allclose(fit.xtx_inv @ (X.T @ X), np.eye(3), atol=1e-9)


def test_collinear_column_is_named():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, 30)
    design = DesignMatrix.build(rng.normal(size=30), x=x, y_t=2.0 * x)
    with pytest.raises(RankDeficiencyError) as excinfo:
        fit_ols(design)
    assert excinfo.value.column in ('x', 'y_t')
    assert excinfo.value.rcond < 1e-12


def test_zero_variance_regressor_is_rank_deficient():
    rng = np.random.default_rng(2)
    design = DesignMatrix.build(rng.normal(size=10), x=rng.normal(size=10), y_t=np.full(10, 4.0))
    with pytest.raises(RankDeficiencyError):
        fit_ols(design)


def test_zero_column_is_rank_deficient():
    rng = np.random.default_rng(2)
    design = DesignMatrix.build(rng.normal(size=10), x=np.zeros(10))
    with pytest.raises(RankDeficiencyError, match="'x'"):
        fit_ols(design)


def test_constant_response_is_degenerate():
    rng = np.random.default_rng(5)
    design = DesignMatrix.build(np.full(25, 5.0), x=rng.uniform(size=25), y_t=rng.uniform(size=25))
    fit = fit_ols(design)
    assert fit.degenerate
    assert fit.r_squared == 1.0
    np.testing.assert_allclose(fit.coefficients, [5.0, 0.0, 0.0], atol=1e-9)


def test_degenerate_response_error_is_an_arithmetic_error():
    assert issubclass(DegenerateResponseError, ArithmeticError)


def test_too_few_observations():
    with pytest.raises(InsufficientDataError):
        DesignMatrix.build([1.0, 2.0], x=[0.0, 1.0], y_t=[1.0, 3.0])


def test_non_finite_design_rejected():
    with pytest.raises(ValidationError):
        DesignMatrix.build([1.0, 2.0, np.nan, 4.0], x=[0.0, 1.0, 2.0, 3.0])


def test_if_only_model():
    rng = np.random.default_rng(6)
    x = rng.uniform(0, 2, 50)
    fit = fit_ols(DesignMatrix.build(0.5 - 0.25 * x, x=x))
    assert fit.p == 2
    np.testing.assert_allclose(fit.coefficients, [0.5, -0.25], atol=1e-12)
    assert predict(fit, 2.0) == pytest.approx(0.0)


def test_predict_full_model():
    fit = fit_ols(exact_plane())
    assert predict(fit, 1.0, 2.0) == pytest.approx(9.0)
    np.testing.assert_allclose(predict(fit, [0.0, 1.0], [0.0, 1.0]), [1.0, 6.0])
    with pytest.raises(ValidationError):
        predict(fit, 1.0)


def test_r_squared_in_unit_interval():
    for seed in range(20):
        fit = fit_ols(generate_regression_design(60, seed=seed, noise=5.0))
        assert 0.0 <= fit.r_squared <= 1.0


@pytest.mark.parametrize('seed', range(20))
def test_response_shift_moves_only_intercept(seed):
    design = generate_regression_design(30, seed=seed)
    shifted = DesignMatrix(design.matrix, design.response + 7.5, design.columns)
    base, moved = fit_ols(design), fit_ols(shifted)
    assert moved.coefficients[0] == pytest.approx(base.coefficients[0] + 7.5, abs=1e-10)
    np.testing.assert_allclose(moved.coefficients[1:], base.coefficients[1:], atol=1e-10)


@pytest.mark.parametrize('a, c', [(2.0, 0.0), (-0.5, 3.0), (1e3, -40.0)])
def test_r_squared_invariant_under_affine_response(a, c):
    design = generate_regression_design(50, seed=11)
    rescaled = DesignMatrix(design.matrix, a * design.response + c, design.columns)
    assert fit_ols(rescaled).r_squared == pytest.approx(fit_ols(design).r_squared, abs=1e-10)
