"""Convex solvers for LASSO, weighted LASSO and constrained l1-minimization.

All three problems share one cyclic coordinate-descent kernel. A dictionary
is an ``(n, m)`` array whose columns are the atoms; no column normalization
happens here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import brentq

from .errors import ConvergenceError, InvalidInputError

__all__ = [
    "SolveConfig",
    "Coefficients",
    "soft_threshold",
    "support_of",
    "solve_lasso",
    "solve_weighted_lasso",
    "solve_constrained_l1",
    "kkt_residual",
]


@dataclass(frozen=True)
class SolveConfig:
    """Stopping rules shared by every solver.

    ``support_threshold=None`` selects the relative default
    ``1e-6 * max(1, max|c_j|)``.
    """

    tol: float = 1e-8
    max_iter: int = 100_000
    support_threshold: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.support_threshold is not None and self.support_threshold < 0:
            raise InvalidInputError("support_threshold must be nonnegative")

    def threshold_for(self, values: np.ndarray) -> float:
        if self.support_threshold is not None:
            return float(self.support_threshold)
        peak = float(np.max(np.abs(values))) if values.size else 0.0
        return 1e-6 * max(1.0, peak)


@dataclass
class Coefficients:
    """A solver output.

    ``support`` holds the indices whose magnitude exceeds ``threshold``.
    The optional diagnostics are filled in by whichever solver produced the
    vector: ``lam`` is the regularization level actually used (for the
    constrained solver, the level found by the root search),
    ``residual_norm`` is ``||y - Yc||_2`` and ``constraint_met`` is only set
    by :func:`solve_constrained_l1`.
    """

    values: np.ndarray
    support: np.ndarray
    threshold: float
    n_iter: int = 0
    kkt: float = 0.0
    lam: float | None = None
    residual_norm: float | None = None
    constraint_met: bool | None = None
    extra: dict = field(default_factory=dict)

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.values)))


def soft_threshold(x, t):
    """sign(x) * max(|x| - t, 0), elementwise."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def support_of(values: np.ndarray, threshold: float) -> np.ndarray:
    return np.flatnonzero(np.abs(values) > threshold)


def _check_problem(Y, y):
    Y = np.asarray(Y, dtype=float)
    y = np.asarray(y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise InvalidInputError(f"dictionary must be a non-empty 2-D array, got shape {Y.shape}")
    if y.ndim != 1 or y.shape[0] != Y.shape[0]:
        raise InvalidInputError(
            f"target length {y.shape} does not match dictionary rows {Y.shape[0]}"
        )
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(y))):
        raise InvalidInputError("dictionary and target must have finite entries")
    return Y, y


def _check_weights(weights, m):
    w = np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise InvalidInputError(f"weights must have shape ({m},), got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise InvalidInputError("weights must be finite and strictly positive")
    return w


def _gram_kkt(g, c, lam):
    # g = Y^T (y - Y c); optimality: g_j = lam * sign(c_j) on the support,
    # |g_j| <= lam elsewhere.
    nz = c != 0
    viol = np.where(nz, np.abs(g - lam * np.sign(c)), np.maximum(0.0, np.abs(g) - lam))
    return float(viol.max()) if viol.size else 0.0


def _refit_support(G, b, c, lam):
    """Solve the stationarity equations on the current support and signs.

    Returns the refitted vector when it is an exact KKT point (signs kept,
    off-support subgradients within ``lam``), else ``None``.
    """
    S = np.flatnonzero(c)
    if S.size == 0:
        return None
    s = np.sign(c[S])
    try:
        x = np.linalg.solve(G[np.ix_(S, S)], b[S] - lam * s)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)) or np.any(np.sign(x) != s):
        return None
    out = np.zeros_like(c)
    out[S] = x
    return out


@njit(cache=True)
def _cd_sweeps(G, diag, c, g, lam, tol, budget, active_only):
    """Run up to ``budget`` coordinate-descent sweeps in place.

    Alternates between sweeps over the nonzero coordinates and full sweeps,
    the active phase ending once its updates stall. Returns the number of
    sweeps done, whether the last full sweep met the stopping rule, and the
    phase to resume in.
    """
    m = c.shape[0]
    done = 0
    while done < budget:
        max_delta = 0.0
        for j in range(m):
            if diag[j] <= 0.0:
                continue
            cj = c[j]
            if active_only and cj == 0.0:
                continue
            u = cj * diag[j] + g[j]
            if u > lam:
                new = (u - lam) / diag[j]
            elif u < -lam:
                new = (u + lam) / diag[j]
            else:
                new = 0.0
            delta = new - cj
            if delta != 0.0:
                c[j] = new
                for k in range(m):
                    g[k] -= delta * G[j, k]
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        done += 1
        peak = 0.0
        for j in range(m):
            if abs(c[j]) > peak:
                peak = abs(c[j])
        small = max_delta <= tol * (1.0 + peak)
        if active_only:
            if small:
                active_only = False
        elif small:
            return done, True, False
        else:
            active_only = True
    return done, False, active_only


def _lasso_cd(Y, y, lam, cfg: SolveConfig, init=None):
    """Cyclic coordinate descent for ``lam*||c||_1 + 0.5*||y - Yc||^2``.

    Works on the Gram matrix so each coordinate update costs O(m). Sweeps
    run in geometrically growing batches; between batches, if the sign
    pattern moved, the support is refitted exactly and a refit satisfying
    the KKT conditions is returned immediately.
    """
    m = Y.shape[1]
    G = np.ascontiguousarray(Y.T @ Y)
    b = Y.T @ y
    diag = np.diag(G).copy()

    c = np.zeros(m) if init is None else np.array(init, dtype=float)
    c[diag <= 0] = 0.0
    g = b - G @ c

    kkt_cap = 10.0 * cfg.tol
    active_only = False
    last_pattern = None
    it = 0
    batch = 1
    while it < cfg.max_iter:
        budget = min(batch, cfg.max_iter - it)
        done, converged, active_only = _cd_sweeps(G, diag, c, g, lam, cfg.tol, budget, active_only)
        it += done
        batch = min(2 * batch, 64)

        pattern = np.sign(c)
        if last_pattern is None or not np.array_equal(pattern, last_pattern):
            last_pattern = pattern
            refit = _refit_support(G, b, c, lam)
            if refit is not None:
                k = _gram_kkt(b - G @ refit, refit, lam)
                if k <= cfg.tol:
                    return refit, it, k
        if converged:
            g = b - G @ c  # drop accumulated update drift
            k = _gram_kkt(g, c, lam)
            if k <= kkt_cap:
                return c, it, k

    g = b - G @ c
    k = _gram_kkt(g, c, lam)
    raise ConvergenceError(
        f"coordinate descent hit max_iter={cfg.max_iter} (KKT residual {k:.3e})",
        last_iterate=c.copy(),
        residual=k,
    )


def _package(values, cfg, n_iter, kkt, lam, residual_norm):
    thr = cfg.threshold_for(values)
    return Coefficients(
        values=values,
        support=support_of(values, thr),
        threshold=thr,
        n_iter=n_iter,
        kkt=kkt,
        lam=lam,
        residual_norm=residual_norm,
    )


def solve_lasso(Y, y, lam, cfg: SolveConfig | None = None, init=None) -> Coefficients:
    """Minimize ``lam*||c||_1 + 0.5*||y - Yc||_2^2`` by coordinate descent.

    Parameters
    ----------
    Y : (n, m) array
        Dictionary, one atom per column.
    y : (n,) array
        Target vector.
    lam : float
        Regularization level, strictly positive.
    cfg : SolveConfig, optional
    init : (m,) array, optional
        Warm start. The result does not depend on it beyond solver accuracy.

    Raises
    ------
    InvalidInputError
        Non-finite entries, shape mismatch or ``lam <= 0``.
    ConvergenceError
        ``cfg.max_iter`` sweeps without meeting the stopping rule; carries
        the last iterate and its KKT residual.
    """
    cfg = cfg or SolveConfig()
    Y, y = _check_problem(Y, y)
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidInputError(f"lambda must be positive and finite, got {lam}")
    c, it, k = _lasso_cd(Y, y, float(lam), cfg, init)
    return _package(c, cfg, it, k, float(lam), float(np.linalg.norm(y - Y @ c)))


def solve_weighted_lasso(Y, y, lam, weights, cfg: SolveConfig | None = None, init=None) -> Coefficients:
    """Minimize ``lam*||W c||_1 + 0.5*||y - Yc||_2^2`` with ``W = diag(weights)``.

    The substitution ``d = W c`` turns this into a plain LASSO over the
    stretched dictionary ``Y W^{-1}``; the returned values are ``W^{-1} d``.
    A warm start ``init`` is given in the ``c`` variable.
    """
    cfg = cfg or SolveConfig()
    Y, y = _check_problem(Y, y)
    w = _check_weights(weights, Y.shape[1])
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidInputError(f"lambda must be positive and finite, got {lam}")
    d_init = None if init is None else np.asarray(init, dtype=float) * w
    d, it, k = _lasso_cd(Y / w, y, float(lam), cfg, d_init)
    c = d / w
    return _package(c, cfg, it, k, float(lam), float(np.linalg.norm(y - Y @ c)))


def solve_constrained_l1(Y, y, tau, cfg: SolveConfig | None = None) -> Coefficients:
    """Minimize ``||c||_1`` subject to ``||y - Yc||_2 <= tau``.

    The LASSO residual norm is nondecreasing in ``lam``, so the constrained
    optimum is the LASSO solution at the level where the residual equals
    ``tau``. That level is bracketed by shrinking ``lam`` geometrically from
    ``||Y^T y||_inf`` and then located with Brent's method (bisection
    safeguarded), each probe warm-started from the previous one.

    When no level down to ``1e-12`` brings the residual under ``tau`` the
    best attempt is returned with ``constraint_met=False`` instead of
    raising.
    """
    cfg = cfg or SolveConfig()
    Y, y = _check_problem(Y, y)
    if not (np.isfinite(tau) and tau > 0):
        raise InvalidInputError(f"tau must be positive and finite, got {tau}")
    tau = float(tau)
    m = Y.shape[1]
    y_norm = float(np.linalg.norm(y))
    slack = 10.0 * cfg.tol
    if y_norm <= tau:
        zero = _package(np.zeros(m), cfg, 0, 0.0, None, y_norm)
        zero.constraint_met = True
        return zero

    lam_max = float(np.max(np.abs(Y.T @ y)))
    if lam_max == 0.0:
        # y orthogonal to every atom: nothing reduces the residual
        zero = _package(np.zeros(m), cfg, 0, 0.0, None, y_norm)
        zero.constraint_met = False
        return zero

    resid_tol = 1e-8 * max(1.0, tau)
    state = {"c": np.zeros(m), "iters": 0, "best": None}

    def probe(lam):
        sol = solve_lasso(Y, y, lam, cfg, init=state["c"])
        state["c"] = sol.values
        state["iters"] += sol.n_iter
        gap = sol.residual_norm - tau
        best = state["best"]
        if best is None or abs(gap) < abs(best[0]) or (
            abs(gap) == abs(best[0]) and gap <= 0 < best[0]
        ):
            state["best"] = (gap, sol)
        return gap

    hi, lo = lam_max, lam_max
    gap_lo = None
    while True:
        lo = lo * 0.1
        if lo < 1e-12:
            lo = 1e-12
        gap_lo = probe(lo)
        if gap_lo <= 0 or lo <= 1e-12:
            break
        hi = lo

    if gap_lo > 0:
        gap, sol = state["best"]
        sol.constraint_met = sol.residual_norm <= tau + slack
        sol.n_iter = state["iters"]
        return sol

    if abs(gap_lo) > resid_tol:
        # The residual at ``hi`` exceeds tau (at lam_max it equals ||y||).
        class _Done(Exception):
            pass

        def f(lam):
            gap = probe(lam)
            if abs(gap) <= resid_tol:
                raise _Done
            return gap

        try:
            brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        except _Done:
            pass

    gap, sol = state["best"]
    sol.n_iter = state["iters"]
    sol.constraint_met = sol.residual_norm <= tau + slack
    return sol


def kkt_residual(Y, y, lam, weights, coeffs) -> float:
    """Largest subgradient violation of the weighted-LASSO optimality system.

    For ``c_j != 0`` the violation is ``|y_j^T (Yc - y)/w_j + lam*sign(c_j)|``;
    for ``c_j == 0`` it is ``max(0, |y_j^T (y - Yc)|/w_j - lam)``. Zero
    exactly at an optimum. ``coeffs`` may be a :class:`Coefficients` or a
    plain vector.
    """
    Y, y = _check_problem(Y, y)
    c = np.asarray(getattr(coeffs, "values", coeffs), dtype=float)
    if c.shape != (Y.shape[1],):
        raise InvalidInputError(f"coefficients must have shape ({Y.shape[1]},), got {c.shape}")
    w = _check_weights(weights if weights is not None else np.ones(Y.shape[1]), Y.shape[1])
    corr = Y.T @ (y - Y @ c) / w
    return _gram_kkt(corr, c, float(lam))
