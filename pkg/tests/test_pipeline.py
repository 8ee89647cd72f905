import numpy as np
import pytest

from reweighted_ssc.data import Dataset
from reweighted_ssc.duality import check_lemma21, classify_constraints, dual_residual
from reweighted_ssc.errors import ConfigError, InvalidInputError
from reweighted_ssc.pipeline import (
    AffinityGraph,
    CoefficientMatrix,
    PipelineConfig,
    build_affinity,
    coarse_regress,
    compute_weights,
    refine_regress,
    row_solution,
    two_step_regress,
)
from reweighted_ssc.solvers import solve_constrained_l1, solve_weighted_lasso
from reweighted_ssc.synthetic import GenerationConfig, generate


@pytest.fixture(scope="module")
def small_data():
    _, data = generate(GenerationConfig(n=30, L=3, d=3, rho=0.3, density=5, sigma=0.1, seed=4))
    return data


def test_weights_worked_example():
    np.testing.assert_allclose(compute_weights(np.array([0.02, 0.91]), 0.01), [0.333, 0.011], atol=5e-4)


def test_weights_trivial_cases():
    np.testing.assert_array_equal(compute_weights(np.zeros(4), 0.3), np.ones(4))
    assert compute_weights(np.array([0.01]), 0.01)[0] == pytest.approx(0.5)
    with pytest.raises(InvalidInputError):
        compute_weights(np.ones(2), 0.0)


def test_weights_in_unit_interval():
    c = np.random.default_rng(0).standard_normal(50) * 3
    w = compute_weights(c, 0.05)
    assert np.all((w > 0) & (w <= 1))


@pytest.mark.parametrize("kwargs", [{"sigma": 0}, {"epsilon": -1}, {"tau_factor": 0}, {"lambda_factor": -1}])
def test_bad_pipeline_config(kwargs):
    with pytest.raises(ConfigError):
        PipelineConfig(**kwargs)


def test_duplicate_point_selects_its_twin():
    rng = np.random.default_rng(1)
    a, b = rng.standard_normal((2, 10))
    a /= np.linalg.norm(a)
    b /= np.linalg.norm(b)
    data = Dataset(points=np.vstack([a, b, a]))
    coeffs = two_step_regress(data, PipelineConfig(sigma=0.01))
    assert list(coeffs.supports[2]) == [0]
    assert list(coeffs.supports[0]) == [1]  # y_1 sees y_3 at shifted index 1


def test_lambda_rule_and_tau(small_data):
    cfg = PipelineConfig(sigma=0.1, epsilon=0.05)
    coarse = coarse_regress(small_data, cfg)
    coeffs = refine_regress(small_data, coarse, cfg)
    assert coarse.tau == pytest.approx(0.2)
    np.testing.assert_allclose(coeffs.lambdas, 0.707 * 0.1 / coarse.l1, rtol=0, atol=1e-12)
    assert np.all(coeffs.lambdas > 0)
    for i in range(small_data.N):
        ref = solve_constrained_l1(small_data.without(i), small_data.points[i], 0.2)
        np.testing.assert_array_equal(coarse.rows[i], ref.values)


def test_baseline_equals_explicit_unit_weights(small_data):
    cfg = PipelineConfig(sigma=0.1, weighted=False)
    coarse = coarse_regress(small_data, cfg)
    coeffs = refine_regress(small_data, coarse, cfg)
    for i in range(small_data.N):
        ref = solve_weighted_lasso(small_data.without(i), small_data.points[i], coeffs.lambdas[i],
                                   np.ones(small_data.N - 1))
        assert coeffs.rows[i].tobytes() == ref.values.tobytes()


def test_weighted_rows_use_rule_weights(small_data):
    cfg = PipelineConfig(sigma=0.1, epsilon=0.02)
    coarse = coarse_regress(small_data, cfg)
    coeffs = refine_regress(small_data, coarse, cfg)
    np.testing.assert_allclose(coeffs.weights, 0.02 / (np.abs(coarse.rows) + 0.02))


def test_self_exclusion_and_dense_layout(small_data):
    coeffs = two_step_regress(small_data, PipelineConfig(sigma=0.1))
    C = coeffs.dense()
    assert C.shape == (small_data.N, small_data.N)
    assert np.all(np.diag(C) == 0)
    mask = coeffs.support_mask()
    assert not np.any(np.diag(mask))
    np.testing.assert_array_equal(mask, np.abs(C) > coeffs.thresholds[:, None])


def test_every_row_satisfies_support_check(small_data):
    coeffs = two_step_regress(small_data, PipelineConfig(sigma=0.1, epsilon=0.01))
    for i in range(small_data.N):
        Y = small_data.without(i)
        sol = row_solution(coeffs, i)
        z = dual_residual(small_data.points[i], Y, coeffs.weights[i], sol, coeffs.lambdas[i])
        part = classify_constraints(z, Y, coeffs.weights[i])
        assert check_lemma21(sol, part).ok


def test_degenerate_row_reported_not_raised():
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((4, 6))
    pts[3] *= 0.01  # inside the tau ball
    coeffs = two_step_regress(Dataset(points=pts), PipelineConfig(sigma=0.5))
    assert 3 in coeffs.degenerate
    assert np.isnan(coeffs.lambdas[3]) and np.all(coeffs.rows[3] == 0)
    assert "lambda" in coeffs.degenerate[3]


def test_needs_three_points():
    with pytest.raises(InvalidInputError):
        two_step_regress(Dataset(points=np.eye(2)), PipelineConfig())


def test_deterministic(small_data):
    a = two_step_regress(small_data, PipelineConfig(sigma=0.1))
    b = two_step_regress(small_data, PipelineConfig(sigma=0.1))
    assert a.rows.tobytes() == b.rows.tobytes()


def _matrix(rows):
    rows = np.asarray(rows, float)
    N = rows.shape[0]
    return CoefficientMatrix(rows=rows, lambdas=np.ones(N), coarse_l1=np.ones(N), weights=np.ones_like(rows),
                             supports=[np.flatnonzero(r) for r in rows], thresholds=np.zeros(N),
                             kkt=np.zeros(N), tau=1.0)


def test_affinity_two_points():
    np.testing.assert_array_equal(build_affinity(_matrix([[1.0], [1.0]])).g, [[0, 2], [2, 0]])


def test_affinity_zero_rows():
    assert np.all(build_affinity(_matrix(np.zeros((4, 3)))).g == 0)


def test_affinity_asymmetric_support_and_signs():
    # row 0 uses point 1 with a negative coefficient, row 1 uses nothing
    g = build_affinity(_matrix([[-3.0, 0.0], [0.0, 0.0], [0.0, 0.0]])).g
    assert g[0, 1] == g[1, 0] == pytest.approx(1.0)
    assert np.all(g >= 0)


def test_affinity_normalizes_rows():
    g = build_affinity(_matrix([[3.0, 4.0], [0.0, 0.0], [0.0, 0.0]])).g
    assert g[0, 1] == pytest.approx(0.6) and g[0, 2] == pytest.approx(0.8)


@pytest.mark.parametrize("g", [[[0, -1], [-1, 0]], [[0, 1], [2, 0]], [[1, 0], [0, 0]], [[0, 1, 0]]])
def test_affinity_graph_invariants(g):
    with pytest.raises(InvalidInputError):
        AffinityGraph(g=np.array(g, float))


def test_weighted_rows_have_at_least_as_many_discoveries():
    """Paper synthetic configuration, averaged over seeds."""
    seeds = range(10)
    weighted, plain = [], []
    for seed in seeds:
        _, data = generate(GenerationConfig(rho=0.5, sigma=0.25, seed=seed))
        cfg = PipelineConfig(sigma=0.25)
        coarse = coarse_regress(data, cfg)
        weighted.append(refine_regress(data, coarse, cfg).support_mask().sum())
        plain.append(refine_regress(data, coarse, cfg.baseline()).support_mask().sum())
    assert np.mean(weighted) >= np.mean(plain), (np.mean(weighted), np.mean(plain))
