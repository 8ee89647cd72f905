import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reweighted_ssc.duality import (
    ConstraintPartition,
    DualPoint,
    RepresentationWitness,
    boundary_dictionary,
    check_lemma21,
    classify_constraints,
    dual_residual,
    representation_witness,
    verify_witness,
)
from reweighted_ssc.errors import DegenerateGeometryError, SingularDictionaryError, StaleSolutionError
from reweighted_ssc.solvers import Coefficients, solve_lasso, solve_weighted_lasso

E1 = np.array([[1.0], [0.0]])


def certify(Y, y, lam, w=None):
    sol = solve_weighted_lasso(Y, y, lam, np.ones(Y.shape[1]) if w is None else w)
    z = dual_residual(y, Y, w, sol, lam)
    part = classify_constraints(z, Y, w)
    return sol, z, part


def random_instance(seed, n=8, m=5, weighted=True):
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, m))
    y = rng.standard_normal(n)
    w = rng.uniform(0.05, 1.0, m) if weighted else np.ones(m)
    lam = rng.uniform(0.05, 0.9) * np.max(np.abs(Y.T @ y) / w)
    return Y, y, w, lam


def test_zero_solution_dual_is_target():
    Y, y, w, _ = random_instance(0)
    lam = 2 * np.max(np.abs(Y.T @ y) / w)
    sol, z, part = certify(Y, y, lam, w)
    assert np.all(sol.values == 0)
    np.testing.assert_array_equal(z.z, y)
    assert part.active.size == 0
    assert part.inactive.size == Y.shape[1]


def test_scalar_dual_point():
    y = np.array([2.0, 0.0])
    sol, z, part = certify(E1, y, 0.5)
    np.testing.assert_allclose(z.z, [0.5, 0.0], atol=1e-12)
    assert (E1[:, 0] @ z.z) == pytest.approx(0.5)
    assert list(part.plus) == [0] and part.minus.size == 0 and part.inactive.size == 0


def test_scalar_dual_point_negated():
    _, _, part = certify(E1, np.array([-2.0, 0.0]), 0.5)
    assert list(part.minus) == [0] and part.plus.size == 0


@pytest.mark.parametrize("seed", range(10))
def test_dual_feasible_on_random_instances(seed):
    Y, y, w, lam = random_instance(seed)
    _, z, _ = certify(Y, y, lam, w)
    assert np.max(np.abs(Y.T @ z.z) / w) <= lam * (1 + 1e-6)


def test_stale_coefficients_rejected():
    Y, y, w, lam = random_instance(1)
    lam = 0.05 * np.max(np.abs(Y.T @ y) / w)
    with pytest.raises(StaleSolutionError):
        dual_residual(y, Y, w, np.zeros(Y.shape[1]), lam)


def test_classify_zero_point_all_inactive():
    Y, _, w, _ = random_instance(2)
    part = classify_constraints(DualPoint(z=np.zeros(Y.shape[0]), lam=1.0), Y, w)
    assert part.inactive.size == Y.shape[1]


def test_partition_is_disjoint_cover():
    Y, y, w, lam = random_instance(3, 10, 7)
    _, _, part = certify(Y, y, lam, w)
    sets = [set(part.plus), set(part.minus), set(part.inactive)]
    assert set().union(*sets) == set(range(7))
    assert sum(len(s) for s in sets) == 7


def test_lemma21_zero_and_planted_violation():
    Y, y, w, lam = random_instance(4)
    sol, _, part = certify(Y, y, lam, w)
    zero = Coefficients(values=np.zeros(5), support=np.array([], dtype=int), threshold=1e-6)
    assert check_lemma21(zero, part).ok
    planted = next(j for j in range(5) if j in part.inactive)
    fake = Coefficients(values=sol.values, support=np.union1d(sol.support, [planted]), threshold=1e-6)
    assert list(check_lemma21(fake, part).violations) == [planted]


@pytest.mark.parametrize("seed", range(20))
def test_support_inside_active_and_sign_consistent(seed):
    Y, y, w, lam = random_instance(seed, 12, 9, weighted=seed % 2 == 0)
    sol, _, part = certify(Y, y, lam, w)
    assert check_lemma21(sol, part).ok
    assert np.all(sol.values[part.plus] >= -sol.threshold)
    assert np.all(sol.values[part.minus] <= sol.threshold)


def test_boundary_orthonormal_case():
    bd = boundary_dictionary(E1, 1.0)
    np.testing.assert_allclose(bd.bar_y, E1, atol=1e-14)
    assert abs(abs(bd.null_basis[1, 0]) - 1.0) < 1e-14 and abs(bd.null_basis[0, 0]) < 1e-14


def test_boundary_scaled_atom():
    bd = boundary_dictionary(2 * E1, 1.0)
    np.testing.assert_allclose(bd.bar_y, 0.5 * E1, atol=1e-14)


@pytest.mark.parametrize("lam", [0.1, 1.0, 3.0])
def test_boundary_biorthogonal(lam):
    Y = np.random.default_rng(5).standard_normal((5, 3))
    bd = boundary_dictionary(Y, lam)
    np.testing.assert_allclose(Y.T @ bd.bar_y, lam * np.eye(3), atol=1e-8 * lam)
    np.testing.assert_allclose(bd.null_basis.T @ bd.null_basis, np.eye(2), atol=1e-10)
    assert np.max(np.abs(Y.T @ bd.null_basis)) < 1e-10


@pytest.mark.parametrize("Y", [np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]]), np.ones((2, 3))])
def test_boundary_rejects_dependent_columns(Y):
    with pytest.raises(SingularDictionaryError):
        boundary_dictionary(Y, 1.0)


def test_witness_scalar_case():
    y = np.array([2.0, 0.3])
    sol, z, part = certify(E1, y, 0.5)
    wit = representation_witness(y, z, part, boundary_dictionary(E1, 0.5), None, sol)
    assert wit.a.size == 0
    np.testing.assert_allclose(wit.b, [1.5], atol=1e-10)
    assert abs(wit.h[0]) == pytest.approx(0.3)
    assert wit.reconstruction_error < 1e-12
    assert verify_witness(wit)


def test_witness_two_dimensional_mixed_region():
    # one active and one inactive constraint in the plane
    Y = np.array([[1.0, 0.5], [0.0, 0.8]])
    y = np.array([1.2, 0.3])
    sol, z, part = certify(Y, y, 0.8)
    np.testing.assert_allclose(sol.values, [0.4, 0.0], atol=1e-12)
    assert list(part.plus) == [0] and list(part.inactive) == [1]
    wit = representation_witness(y, z, part, boundary_dictionary(Y, 0.8), None, sol)
    # a = y_2^T z / lam with z = (0.8, 0.3)
    np.testing.assert_allclose(wit.a, [0.64 / 0.8], atol=1e-12)
    np.testing.assert_allclose(wit.b, [0.4], atol=1e-12)
    assert abs(wit.a[0]) < 1 and wit.b[0] > 0
    assert verify_witness(wit)


def test_witness_interior_case():
    Y, y, w, _ = random_instance(6)
    lam = 3 * np.max(np.abs(Y.T @ y) / w)
    sol, z, part = certify(Y, y, lam, w)
    wit = representation_witness(y, z, part, boundary_dictionary(Y, lam), w, sol)
    assert wit.b.size == 0
    assert np.all(np.abs(wit.a) < 1)
    assert verify_witness(wit)


@pytest.mark.parametrize("seed", range(20))
def test_witness_recovers_coefficients(seed):
    Y, y, w, lam = random_instance(seed, 9, 5, weighted=seed % 2 == 1)
    sol, z, part = certify(Y, y, lam, w)
    wit = representation_witness(y, z, part, boundary_dictionary(Y, lam), w, sol)
    assert verify_witness(wit, 1e-7)
    assert wit.dual_error < 1e-7
    # in the stretched variable d = W c the data-column coefficient is |d_j| / w_j
    d = w * sol.values
    np.testing.assert_allclose(wit.b, np.abs(d[wit.active]) / w[wit.active], atol=1e-7)


def test_witness_degenerate_anchor_system():
    Y, y, w, lam = random_instance(7)
    sol, z, part = certify(Y, y, lam, w)
    with pytest.raises(DegenerateGeometryError):
        representation_witness(y, z, part, boundary_dictionary(Y, lam), w, sol, cond_limit=1.0)


def _hand_witness(a, b):
    return RepresentationWitness(a=np.array(a), b=np.array(b), h=np.zeros(0), reconstruction_error=0.0,
                                 inactive=np.arange(len(a)), active=np.arange(len(b)), target_norm=1.0)


def test_verify_witness_bounds():
    assert verify_witness(_hand_witness([0.5], [0.2]))
    assert not verify_witness(_hand_witness([1.5], [0.2]))
    assert not verify_witness(_hand_witness([0.5], [-0.1]))
    bad = _hand_witness([0.5], [0.2])
    bad.reconstruction_error = 1.0
    assert not verify_witness(bad)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(3, 10), weighted=st.booleans())
def test_witness_valid_property(seed, n, weighted):
    m = max(1, min(6, n - 1 - seed % 2))
    Y, y, w, lam = random_instance(seed, n, m, weighted)
    sol, z, part = certify(Y, y, lam, w)
    assert check_lemma21(sol, part).ok
    wit = representation_witness(y, z, part, boundary_dictionary(Y, lam), w, sol)
    assert verify_witness(wit, 1e-7)
    assert wit.b_mismatch <= 1e-7


def test_partition_type_active_union():
    p = ConstraintPartition(plus=np.array([2]), minus=np.array([0]), inactive=np.array([1]), tol_used=1e-6)
    assert list(p.active) == [0, 2]


def test_plain_lasso_dual_matches_weighted_unit():
    Y, y, _, lam = random_instance(8, weighted=False)
    sol = solve_lasso(Y, y, lam)
    np.testing.assert_allclose(dual_residual(y, Y, None, sol, lam).z, y - Y @ sol.values)
