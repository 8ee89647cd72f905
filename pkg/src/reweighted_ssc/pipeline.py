"""Two-step reweighted l1 neighbor identification and the similarity graph.

For each sample ``y_i`` against the dictionary ``Y_{-i}`` of all the others:

1. coarse fit ``c~_i = argmin ||c||_1  s.t. ||y_i - Y_{-i} c||_2 <= tau``;
2. ``lam_i = lambda_factor * sigma / ||c~_i||_1``;
3. weights ``w_j = eps / (|c~_ij| + eps)`` (all ones for the baseline);
4. refined fit ``c*_i`` from the weighted LASSO at ``lam_i``.

The coarse step does not depend on the weighting, so :func:`coarse_regress`
and :func:`refine_regress` are exposed separately; sweeps reuse one coarse
pass for every epsilon and for the unweighted baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .errors import ConfigError, ConvergenceError, DegenerateLambdaError, InvalidInputError
from .solvers import Coefficients, SolveConfig, solve_constrained_l1, solve_weighted_lasso

__all__ = [
    "PipelineConfig",
    "CoarseFit",
    "CoefficientMatrix",
    "AffinityGraph",
    "compute_weights",
    "coarse_regress",
    "refine_regress",
    "two_step_regress",
    "embed_row",
    "row_solution",
    "build_affinity",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    sigma: float = 0.25
    epsilon: float = 0.01
    weighted: bool = True
    tau_factor: float = 2.0
    lambda_factor: float = 0.707
    solver: SolveConfig = field(default_factory=SolveConfig)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if not (self.tau_factor > 0 and self.lambda_factor > 0):
            raise ConfigError("tau_factor and lambda_factor must be positive")

    @property
    def tau(self) -> float:
        return self.tau_factor * self.sigma

    def lam_for(self, coarse_l1: float) -> float:
        return self.lambda_factor * self.sigma / coarse_l1

    def baseline(self) -> "PipelineConfig":
        return replace(self, weighted=False)


@dataclass
class CoarseFit:
    """First-step solutions, one row per sample (length ``N-1``, self removed)."""

    rows: np.ndarray
    l1: np.ndarray
    tau: float
    constraint_met: np.ndarray


@dataclass
class CoefficientMatrix:
    """Second-step representation vectors.

    ``rows[i]`` has length ``N-1`` and is indexed like ``Y_{-i}``.
    ``lambdas[i]`` is NaN and ``rows[i]`` zero for degenerate samples, which
    are listed with a reason in ``degenerate``.
    """

    rows: np.ndarray
    lambdas: np.ndarray
    coarse_l1: np.ndarray
    weights: np.ndarray
    supports: list
    thresholds: np.ndarray
    kkt: np.ndarray
    tau: float
    degenerate: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.rows.shape[0]

    def dense(self) -> np.ndarray:
        """``(N, N)`` matrix whose row ``i`` is ``rows[i]`` with a zero at ``i``."""
        return np.vstack([embed_row(self.rows[i], i) for i in range(self.N)])

    def support_mask(self) -> np.ndarray:
        """``(N, N)`` boolean discovery matrix in full indexing."""
        mask = np.zeros((self.N, self.N), dtype=bool)
        for i, s in enumerate(self.supports):
            full = np.asarray(s, dtype=int)
            full = full + (full >= i)
            mask[i, full] = True
        return mask


@dataclass
class AffinityGraph:
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidInputError("affinity must be a square matrix")
        if np.any(g < 0) or not np.allclose(g, g.T, atol=1e-12) or np.any(np.diag(g) != 0):
            raise InvalidInputError("affinity must be symmetric, nonnegative, zero on the diagonal")
        self.g = g

    @property
    def N(self) -> int:
        return self.g.shape[0]


def compute_weights(coarse, epsilon: float) -> np.ndarray:
    """``eps / (|c~_j| + eps)`` elementwise; every weight lies in ``(0, 1]``."""
    if not epsilon > 0:
        raise InvalidInputError(f"epsilon must be positive, got {epsilon}")
    c = np.abs(np.asarray(getattr(coarse, "values", coarse), dtype=float))
    return epsilon / (c + epsilon)


def embed_row(row, i: int) -> np.ndarray:
    return np.insert(np.asarray(row, dtype=float), i, 0.0)


def coarse_regress(data: Dataset, cfg: PipelineConfig) -> CoarseFit:
    N = data.N
    if N < 3:
        raise InvalidInputError("two-step regression needs at least three points")
    rows = np.zeros((N, N - 1))
    met = np.zeros(N, dtype=bool)
    for i in range(N):
        try:
            sol = solve_constrained_l1(data.without(i), data.points[i], cfg.tau, cfg.solver)
        except ConvergenceError as exc:
            exc.row = i
            raise
        rows[i] = sol.values
        met[i] = bool(sol.constraint_met)
    return CoarseFit(rows=rows, l1=np.abs(rows).sum(axis=1), tau=cfg.tau, constraint_met=met)


def refine_regress(data: Dataset, coarse: CoarseFit, cfg: PipelineConfig) -> CoefficientMatrix:
    N = data.N
    rows = np.zeros((N, N - 1))
    lambdas = np.full(N, np.nan)
    weights = np.ones((N, N - 1))
    thresholds = np.zeros(N)
    kkt = np.zeros(N)
    supports = []
    degenerate = {}
    for i in range(N):
        if coarse.l1[i] == 0.0:
            err = DegenerateLambdaError(
                f"coarse solution of sample {i} is zero (tau >= ||y_i||); lambda rule undefined", row=i
            )
            log.debug("%s", err)
            degenerate[i] = str(err)
            supports.append(np.array([], dtype=int))
            continue
        lam = cfg.lam_for(coarse.l1[i])
        w = compute_weights(coarse.rows[i], cfg.epsilon) if cfg.weighted else np.ones(N - 1)
        try:
            sol = solve_weighted_lasso(data.without(i), data.points[i], lam, w, cfg.solver)
        except ConvergenceError as exc:
            exc.row = i
            raise
        rows[i] = sol.values
        lambdas[i] = lam
        weights[i] = w
        thresholds[i] = sol.threshold
        kkt[i] = sol.kkt
        supports.append(sol.support)
    return CoefficientMatrix(
        rows=rows,
        lambdas=lambdas,
        coarse_l1=coarse.l1.copy(),
        weights=weights,
        supports=supports,
        thresholds=thresholds,
        kkt=kkt,
        tau=coarse.tau,
        degenerate=degenerate,
    )


def two_step_regress(data: Dataset, cfg: PipelineConfig) -> CoefficientMatrix:
    """Run both steps for every sample. See the module docstring."""
    return refine_regress(data, coarse_regress(data, cfg), cfg)


def row_solution(coeffs: CoefficientMatrix, i: int) -> Coefficients:
    """Row ``i`` repackaged as solver output, for the duality checks."""
    return Coefficients(
        values=coeffs.rows[i].copy(),
        support=np.asarray(coeffs.supports[i], dtype=int),
        threshold=float(coeffs.thresholds[i]),
        kkt=float(coeffs.kkt[i]),
        lam=float(coeffs.lambdas[i]),
    )


def build_affinity(coeffs: CoefficientMatrix) -> AffinityGraph:
    """Unit-l2 rows with the self slot inserted, then ``g = |C| + |C|^T``."""
    C = np.abs(coeffs.dense())
    norms = np.linalg.norm(C, axis=1, keepdims=True)
    C = np.divide(C, norms, out=np.zeros_like(C), where=norms > 0)
    return AffinityGraph(g=C + C.T)
