"""Dual certificates for the weighted LASSO.

The dual of ``min lam*||W c||_1 + 0.5*||y - Yc||^2`` is the Euclidean
projection of ``y`` onto the polyhedron
``P = {z : |y_j^T z| / w_j <= lam for every j}``, and at the optimum the
projection equals the primal residual ``z = y - Y c``. This module recovers
that point from a primal solution, sorts the scalar constraints into
active-positive, active-negative and inactive, and rebuilds ``y`` from the
boundary ("anchor") vectors of ``P`` so that the sign and magnitude bounds
predicted by the geometry can be checked on concrete instances.

Coefficient vectors here are always in the original variable ``c`` returned
by :func:`~reweighted_ssc.solvers.solve_weighted_lasso`. In the stretched
variable ``d = W c`` the data-column coefficient of an active constraint is
``|d_j| / w_j``, which is the same number as ``|c_j|``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError, SingularDictionaryError, StaleSolutionError
from .solvers import Coefficients

__all__ = [
    "DualPoint",
    "ConstraintPartition",
    "BoundaryDictionary",
    "RepresentationWitness",
    "Lemma21Report",
    "dual_residual",
    "classify_constraints",
    "check_lemma21",
    "boundary_dictionary",
    "representation_witness",
    "verify_witness",
]

STALE_SLACK = 1e-4


@dataclass
class DualPoint:
    z: np.ndarray
    lam: float
    # max_j |y_j^T z| / (w_j * lam); at most 1 for a feasible point
    max_ratio: float = 0.0


@dataclass
class ConstraintPartition:
    plus: np.ndarray
    minus: np.ndarray
    inactive: np.ndarray
    tol_used: float
    # y_j^T z / (w_j * lam) for every j, kept for diagnostics
    ratios: np.ndarray | None = None

    @property
    def active(self) -> np.ndarray:
        return np.union1d(self.plus, self.minus)


@dataclass
class BoundaryDictionary:
    """Biorthogonal boundary vectors and a null-space completion.

    ``bar_y`` is ``(n, m)`` with ``Y^T bar_y = lam * I``; ``null_basis`` is
    ``(n, n - m)`` with orthonormal columns orthogonal to every atom.
    ``atoms`` is the dictionary the vectors were built from.
    """

    bar_y: np.ndarray
    null_basis: np.ndarray
    lam: float
    atoms: np.ndarray


@dataclass
class RepresentationWitness:
    """Coordinates of ``y`` in the anchor dictionary.

    ``a[k]`` multiplies the scaled boundary vector of constraint
    ``inactive[k]``; ``b[k]`` multiplies the data column of constraint
    ``active[k]`` (entered with the sign of that constraint); ``h`` holds the
    null-space coordinates. ``dual_error`` measures how well the boundary
    part (everything except the ``b`` terms) reproduces the dual point, and
    ``b_mismatch`` is ``max |b_k - |c_{active[k]}||`` when primal
    coefficients were supplied.
    """

    a: np.ndarray
    b: np.ndarray
    h: np.ndarray
    reconstruction_error: float
    inactive: np.ndarray
    active: np.ndarray
    target_norm: float
    dual_error: float | None = None
    b_mismatch: float | None = None


@dataclass
class Lemma21Report:
    violations: np.ndarray

    @property
    def ok(self) -> bool:
        return self.violations.size == 0


def _weights(weights, m):
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,) or np.any(w <= 0):
        raise InvalidInputError(f"weights must be a positive vector of length {m}")
    return w


def dual_residual(y, Y, weights, coeffs, lam) -> DualPoint:
    """Dual optimum recovered from a primal solution as ``z = y - Y c``.

    Raises
    ------
    StaleSolutionError
        If ``z`` violates a dual constraint by more than ``1e-4 * lam``,
        which means ``coeffs`` was not optimal for this problem.
    """
    Y = np.asarray(Y, dtype=float)
    y = np.asarray(y, dtype=float)
    c = np.asarray(getattr(coeffs, "values", coeffs), dtype=float)
    w = _weights(weights, Y.shape[1])
    lam = float(lam)
    z = y - Y @ c
    ratio = float(np.max(np.abs(Y.T @ z) / w)) / lam if Y.shape[1] else 0.0
    if ratio > 1.0 + STALE_SLACK:
        raise StaleSolutionError(
            f"residual violates the dual constraints (max ratio {ratio:.6g}); coefficients are not optimal"
        )
    return DualPoint(z=z, lam=lam, max_ratio=ratio)


def classify_constraints(z: DualPoint, Y, weights, activity_tol: float = 1e-6) -> ConstraintPartition:
    """Split constraint indices by the value of ``y_j^T z / w_j`` against ``+-lam``."""
    Y = np.asarray(Y, dtype=float)
    w = _weights(weights, Y.shape[1])
    ratios = (Y.T @ z.z) / w / z.lam
    edge = 1.0 - activity_tol
    plus = np.flatnonzero(ratios >= edge)
    minus = np.flatnonzero(ratios <= -edge)
    inactive = np.flatnonzero(np.abs(ratios) < edge)
    return ConstraintPartition(plus=plus, minus=minus, inactive=inactive, tol_used=activity_tol, ratios=ratios)


def check_lemma21(coeffs: Coefficients, partition: ConstraintPartition) -> Lemma21Report:
    """Support indices that sit on inactive constraints (expected: none)."""
    support = np.asarray(coeffs.support)
    return Lemma21Report(violations=np.setdiff1d(support, partition.active))


def boundary_dictionary(Y, lam, rank_tol: float = 1e-10) -> BoundaryDictionary:
    """Boundary vectors ``bar_y_j`` (the first ``m`` columns of
    ``lam * (A^T)^{-1}`` with ``A = [Y, N]``) and the null-space basis ``N``.

    The square case ``m == n`` is allowed and yields an empty null basis.
    """
    Y = np.asarray(Y, dtype=float)
    n, m = Y.shape
    if m > n:
        raise SingularDictionaryError(f"{m} atoms in R^{n} cannot be linearly independent")
    U, s, _ = np.linalg.svd(Y, full_matrices=True)
    if s.size == 0 or s[-1] <= rank_tol * max(1.0, s[0]):
        raise SingularDictionaryError("dictionary columns are linearly dependent")
    null_basis = U[:, m:]
    A = np.hstack([Y, null_basis])
    bar = np.linalg.solve(A.T, float(lam) * np.eye(n))[:, :m]
    return BoundaryDictionary(bar_y=bar, null_basis=null_basis, lam=float(lam), atoms=Y)


def representation_witness(y, z: DualPoint, partition: ConstraintPartition,
                           boundary: BoundaryDictionary, weights=None,
                           coeffs: Coefficients | None = None,
                           cond_limit: float = 1e12) -> RepresentationWitness:
    """Express ``y`` through the anchor dictionary of its polyhedral region.

    Solves

        y = sum_{inactive} a_j w_j bar_y_j
            + sum_{plus}  (w_j bar_y_j + b_j y_j)
            - sum_{minus} (w_j bar_y_j + b_j y_j)
            + sum_k h_k n_k

    for ``(a, b, h)`` by least squares on the ``n x n`` anchor system. The
    weighting enters only through the scaled boundary vectors
    ``w_j bar_y_j``, which are biorthogonal to the stretched atoms
    ``y_j / w_j``. The witness itself is computed from geometry alone;
    ``z`` and ``coeffs`` only feed the ``dual_error`` and ``b_mismatch``
    cross-checks.

    Raises
    ------
    DegenerateGeometryError
        If the anchor matrix is singular (condition number above
        ``cond_limit``).
    """
    Y = boundary.atoms
    y = np.asarray(y, dtype=float)
    n, m = Y.shape
    w = _weights(weights, m)
    scaled_bar = boundary.bar_y * w
    inactive = np.asarray(partition.inactive, dtype=int)
    plus = np.asarray(partition.plus, dtype=int)
    minus = np.asarray(partition.minus, dtype=int)
    active = np.concatenate([plus, minus])
    signs = np.concatenate([np.ones(plus.size), -np.ones(minus.size)])

    offset = scaled_bar[:, plus].sum(axis=1) - scaled_bar[:, minus].sum(axis=1)
    anchors = np.hstack([
        scaled_bar[:, inactive],
        Y[:, active] * signs,
        boundary.null_basis,
    ])
    if anchors.shape[1] != n:
        raise DegenerateGeometryError(f"anchor system has {anchors.shape[1]} columns for dimension {n}")
    sv = np.linalg.svd(anchors, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > cond_limit:
        raise DegenerateGeometryError("anchor system is singular")
    rhs = y - offset
    sol, *_ = np.linalg.lstsq(anchors, rhs, rcond=None)
    err = float(np.linalg.norm(anchors @ sol - rhs))
    k0, k1 = inactive.size, inactive.size + active.size
    a, b, h = sol[:k0], sol[k0:k1], sol[k1:]

    dual_error = None
    if z is not None:
        z_rebuilt = scaled_bar[:, inactive] @ a + offset + boundary.null_basis @ h
        dual_error = float(np.linalg.norm(z_rebuilt - z.z))
    b_mismatch = None
    if coeffs is not None and active.size:
        c = np.asarray(getattr(coeffs, "values", coeffs), dtype=float)
        b_mismatch = float(np.max(np.abs(b - np.abs(c[active]))))
    elif coeffs is not None:
        b_mismatch = 0.0
    return RepresentationWitness(
        a=a,
        b=b,
        h=h,
        reconstruction_error=err,
        inactive=inactive,
        active=active,
        target_norm=float(np.linalg.norm(y)),
        dual_error=dual_error,
        b_mismatch=b_mismatch,
    )


def verify_witness(w: RepresentationWitness, slack: float = 1e-7) -> bool:
    """True iff ``|a_j| < 1 + slack``, ``b_j >= -slack`` and the
    reconstruction error is at most ``slack * (1 + ||y||)``."""
    if w.a.size and not np.all(np.abs(w.a) < 1.0 + slack):
        return False
    if w.b.size and not np.all(w.b >= -slack):
        return False
    return w.reconstruction_error <= slack * (1.0 + w.target_norm)
