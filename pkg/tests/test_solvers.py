import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bpdn_admm, lasso_fista, scalar_lasso
from reweighted_ssc.errors import ConvergenceError, InvalidInputError
from reweighted_ssc.solvers import (
    SolveConfig,
    kkt_residual,
    soft_threshold,
    solve_constrained_l1,
    solve_lasso,
    solve_weighted_lasso,
)

E1 = np.array([[1.0], [0.0]])
Y2 = np.array([2.0, 0.0])


def random_problem(seed, n=8, m=6):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, m)), rng.standard_normal(n)


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([3.0, -3.0, 0.5]), 1.0), [2.0, -2.0, 0.0])


def test_scalar_lasso_closed_form():
    sol = solve_lasso(E1, Y2, 0.5)
    assert sol.values == pytest.approx([1.5], abs=1e-12)
    assert sol.values[0] == pytest.approx(scalar_lasso(E1[:, 0], Y2, 0.5))
    assert list(sol.support) == [0]


@pytest.mark.parametrize("seed", range(5))
def test_large_lambda_gives_zero(seed):
    Y, y = random_problem(seed)
    lam = np.max(np.abs(Y.T @ y))
    sol = solve_lasso(Y, y, lam * (1 + 1e-12))
    assert np.all(sol.values == 0)
    assert sol.support.size == 0


@pytest.mark.parametrize("seed", range(5))
def test_matches_proximal_gradient(seed):
    rng = np.random.default_rng(100 + seed)
    Y, y = rng.standard_normal((5, 4)), rng.standard_normal(5)
    sol = solve_lasso(Y, y, 0.1)
    ref = lasso_fista(Y, y, 0.1)
    np.testing.assert_allclose(sol.values, ref, atol=1e-6)


def test_weighted_scalar():
    sol = solve_weighted_lasso(E1, Y2, 0.5, [2.0])
    assert sol.values == pytest.approx([1.0], abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_unit_weights_match_plain(seed):
    Y, y = random_problem(seed)
    a = solve_lasso(Y, y, 0.3)
    b = solve_weighted_lasso(Y, y, 0.3, np.ones(Y.shape[1]))
    np.testing.assert_array_equal(a.values, b.values)


@pytest.mark.parametrize("seed", range(5))
def test_weighted_matches_rescaled_and_fista(seed):
    Y, y = random_problem(seed)
    w = np.random.default_rng(seed).uniform(0.1, 2.0, Y.shape[1])
    sol = solve_weighted_lasso(Y, y, 0.2, w)
    scaled = solve_lasso(Y / w, y, 0.2).values / w
    np.testing.assert_allclose(sol.values, scaled, atol=1e-8)
    np.testing.assert_allclose(sol.values, lasso_fista(Y, y, 0.2, w, iters=40000), atol=1e-6)


def test_constrained_scalar():
    sol = solve_constrained_l1(E1, Y2, 0.5)
    assert sol.values == pytest.approx([1.5], abs=1e-7)
    assert sol.residual_norm == pytest.approx(0.5, abs=1e-7)
    assert sol.constraint_met


@pytest.mark.parametrize("tau", [2.0, 2.5, 10.0])
def test_constrained_zero_when_tau_covers_target(tau):
    sol = solve_constrained_l1(E1, Y2, tau)
    assert np.all(sol.values == 0)
    assert sol.constraint_met


@pytest.mark.parametrize("seed", range(3))
def test_constrained_matches_admm(seed):
    rng = np.random.default_rng(200 + seed)
    Y, y = rng.standard_normal((6, 8)), rng.standard_normal(6)
    sol = solve_constrained_l1(Y, y, 0.1)
    ref = bpdn_admm(Y, y, 0.1)
    assert np.linalg.norm(y - Y @ ref) <= 0.1 + 1e-5
    assert sol.l1 == pytest.approx(np.abs(ref).sum(), rel=1e-4)
    assert sol.residual_norm == pytest.approx(0.1, abs=1e-7)


def test_constrained_infeasible_flags_instead_of_raising():
    # y has a component orthogonal to the only atom, of norm 1 > tau
    sol = solve_constrained_l1(E1, np.array([1.0, 1.0]), 0.5)
    assert not sol.constraint_met
    assert sol.residual_norm == pytest.approx(1.0, abs=1e-6)
    assert sol.values[0] == pytest.approx(1.0, abs=1e-6)


def test_constrained_target_orthogonal_to_atoms():
    sol = solve_constrained_l1(E1, np.array([0.0, 1.0]), 0.5)
    assert not sol.constraint_met
    assert np.all(sol.values == 0)


def test_kkt_examples():
    assert kkt_residual(E1, Y2, 0.5, None, np.array([1.5])) <= 1e-10
    Y, y = random_problem(0)
    lam = np.max(np.abs(Y.T @ y))
    assert kkt_residual(Y, y, lam, np.ones(Y.shape[1]), np.zeros(Y.shape[1])) == 0.0
    sol = solve_lasso(Y, y, 0.2)
    bumped = sol.values.copy()
    bumped[0] += 0.1
    assert kkt_residual(Y, y, 0.2, None, bumped) > 0


def test_kkt_weighted_formula():
    # one coordinate per kind: nonzero and zero
    Y = np.eye(2)
    y = np.array([2.0, 0.3])
    w = np.array([0.5, 2.0])
    c = np.array([1.0, 0.0])
    # j=0: |(0 - 1) * ... | = |y0^T (Yc - y)/w0 + lam| = |-1/0.5 + 1| = 1
    # j=1: max(0, 0.3/2 - 1) = 0
    assert kkt_residual(Y, y, 1.0, w, c) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_non_finite_input_rejected(bad):
    Y, y = random_problem(0)
    Y[0, 0] = bad
    with pytest.raises(InvalidInputError):
        solve_lasso(Y, y, 0.1)


@pytest.mark.parametrize("w", [[0.0], [-1.0]])
def test_nonpositive_weights_rejected(w):
    with pytest.raises(InvalidInputError):
        solve_weighted_lasso(E1, Y2, 0.5, w)


@pytest.mark.parametrize("lam", [0.0, -1.0, np.inf])
def test_bad_lambda_rejected(lam):
    with pytest.raises(InvalidInputError):
        solve_lasso(E1, Y2, lam)


def test_shape_mismatch_rejected():
    with pytest.raises(InvalidInputError):
        solve_lasso(E1, np.ones(3), 0.5)


@pytest.mark.parametrize("kwargs", [{"tol": 0}, {"max_iter": 0}, {"support_threshold": -1}])
def test_bad_solve_config(kwargs):
    with pytest.raises(InvalidInputError):
        SolveConfig(**kwargs)


def test_iteration_cap_raises_with_last_iterate():
    rng = np.random.default_rng(7)
    base = rng.standard_normal((30, 1))
    Y = base + 0.01 * rng.standard_normal((30, 20))  # nearly collinear atoms
    y = rng.standard_normal(30)
    with pytest.raises(ConvergenceError) as info:
        solve_lasso(Y, y, 1e-4, SolveConfig(max_iter=2))
    assert info.value.last_iterate.shape == (20,)
    assert info.value.residual > 0


def test_support_threshold_is_reported():
    sol = solve_lasso(E1, Y2, 0.5, SolveConfig(support_threshold=2.0))
    assert sol.threshold == 2.0
    assert sol.support.size == 0
    sol = solve_lasso(E1, Y2, 0.5)
    assert sol.threshold == pytest.approx(1.5e-6)


def test_deterministic():
    Y, y = random_problem(3, 20, 15)
    a = solve_lasso(Y, y, 0.05)
    b = solve_lasso(Y, y, 0.05)
    assert a.values.tobytes() == b.values.tobytes()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_residual_monotone_and_l1_shrinks(seed):
    Y, y = random_problem(seed, 10, 7)
    w = np.random.default_rng(seed).uniform(0.2, 1.0, 7)
    top = np.max(np.abs(Y.T @ y) / w)
    lams = top * np.array([0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0])
    sols = [solve_weighted_lasso(Y, y, lam, w) for lam in lams]
    res = [s.residual_norm for s in sols]
    assert all(a <= b + 1e-9 for a, b in zip(res, res[1:]))
    plain = [solve_lasso(Y, y, lam) for lam in lams]
    l1 = [s.l1 for s in plain]
    assert all(b <= a + 1e-9 for a, b in zip(l1, l1[1:]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.01, 0.95))
def test_kkt_certificate_on_converged_solves(seed, frac):
    Y, y = random_problem(seed, 12, 9)
    w = np.random.default_rng(seed + 1).uniform(0.05, 1.0, 9)
    lam = frac * np.max(np.abs(Y.T @ y) / w)
    cfg = SolveConfig()
    sol = solve_weighted_lasso(Y, y, lam, w, cfg)
    assert kkt_residual(Y, y, lam, w, sol) <= 10 * cfg.tol
