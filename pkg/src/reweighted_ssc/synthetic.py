"""Semi-random union-of-subspaces data.

Subspaces are fixed by a seed; signals are uniform on the unit sphere of
their subspace and noise is i.i.d. ambient Gaussian with covariance
``(sigma^2 / n) I``.

Random streams come from numpy's Philox counter-based generator keyed by a
``SeedSequence`` of ``(seed, purpose, index)``: purpose 0 is the subspace
frame, purpose 1 the samples of cluster ``index``. Each cluster therefore
draws from its own stream and generation order does not matter.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset
from .errors import ConfigError, InvalidInputError

__all__ = [
    "SubspaceEnsemble",
    "GenerationConfig",
    "substream",
    "random_orthogonal",
    "build_equiaffine_subspaces",
    "affinity_between",
    "affinity_matrix",
    "sample_dataset",
    "sample_noise",
    "generate",
]

_FRAME, _SAMPLES, _NOISE_ONLY = 0, 1, 2


def substream(seed: int, *keys: int) -> np.random.Generator:
    if seed < 0:
        raise ConfigError(f"seeds must be nonnegative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


@dataclass
class SubspaceEnsemble:
    bases: list
    n: int

    @property
    def dims(self) -> list:
        return [U.shape[1] for U in self.bases]

    @property
    def L(self) -> int:
        return len(self.bases)


@dataclass
class GenerationConfig:
    n: int = 100
    L: int = 3
    d: int = 4
    rho: float = 0.5
    density: float = 5.0
    sigma: float = 0.25
    seed: int = 0

    def validate(self) -> "GenerationConfig":
        if self.n < 1 or self.L < 1:
            raise ConfigError("n and L must be positive")
        if not 1 <= self.d <= self.n:
            raise ConfigError(f"subspace dimension d={self.d} must lie in [1, n={self.n}]")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.rho}")
        if self.density < 1:
            raise ConfigError(f"density must be >= 1, got {self.density}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        _check_budget(self.n, self.L, self.d, self.rho)
        return self

    def to_dict(self) -> dict:
        return asdict(self)


def _frame_width(L, d, rho):
    if rho == 1.0:
        return d
    if rho == 0.0:
        return L * d
    return (L + 1) * d


def _check_budget(n, L, d, rho):
    need = _frame_width(L, d, rho)
    if need > n:
        raise ConfigError(
            f"equi-affine construction with L={L}, d={d}, rho={rho} needs {need} ambient dimensions, have n={n}"
        )


def random_orthogonal(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First ``k`` columns of a Haar-distributed orthogonal ``n x n`` matrix."""
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.sign(np.diag(R))


def build_equiaffine_subspaces(n: int, L: int, d: int, rho: float, seed: int) -> SubspaceEnsemble:
    """``L`` subspaces of dimension ``d`` whose pairwise affinity is exactly ``rho``.

    A shared block ``C`` and private blocks ``P_k`` are carved out of one
    random orthonormal frame, and ``U_k = sqrt(rho) C + sqrt(1 - rho) P_k``.
    Then ``U_i^T U_j = rho I`` for every ``i != j``. Degenerate ends need
    less room: ``rho = 0`` drops ``C`` and ``rho = 1`` drops the ``P_k``.
    """
    _check_budget(n, L, d, rho)
    rng = substream(seed, _FRAME)
    frame = random_orthogonal(n, _frame_width(L, d, rho), rng)
    cos_t, sin_t = np.sqrt(rho), np.sqrt(1.0 - rho)
    if rho == 1.0:
        return SubspaceEnsemble(bases=[frame.copy() for _ in range(L)], n=n)
    if rho == 0.0:
        return SubspaceEnsemble(bases=[frame[:, k * d:(k + 1) * d].copy() for k in range(L)], n=n)
    common = frame[:, :d]
    bases = [cos_t * common + sin_t * frame[:, (k + 1) * d:(k + 2) * d] for k in range(L)]
    return SubspaceEnsemble(bases=bases, n=n)


def affinity_between(Ui, Uj, ortho_tol: float = 1e-8) -> float:
    """``||Ui^T Uj||_F / sqrt(min(d_i, d_j))`` for orthonormal bases."""
    Ui = np.asarray(Ui, dtype=float)
    Uj = np.asarray(Uj, dtype=float)
    for U in (Ui, Uj):
        if U.ndim != 2 or np.max(np.abs(U.T @ U - np.eye(U.shape[1]))) > ortho_tol:
            raise InvalidInputError("affinity needs orthonormal bases")
    val = np.linalg.norm(Ui.T @ Uj) / np.sqrt(min(Ui.shape[1], Uj.shape[1]))
    return float(min(1.0, val))


def affinity_matrix(ensemble: SubspaceEnsemble) -> np.ndarray:
    L = ensemble.L
    out = np.eye(L)
    for i in range(L):
        for j in range(i + 1, L):
            out[i, j] = out[j, i] = affinity_between(ensemble.bases[i], ensemble.bases[j])
    return out


def sample_dataset(ensemble: SubspaceEnsemble, density: float, sigma: float, seed: int) -> Dataset:
    """Draw ``floor(density * d_k)`` noisy points from each subspace.

    Points are grouped by cluster in order, so labels are nondecreasing.
    """
    if density < 1:
        raise ConfigError(f"density must be >= 1, got {density}")
    n = ensemble.n
    points, signals, labels = [], [], []
    for k, U in enumerate(ensemble.bases):
        rng = substream(seed, _SAMPLES, k)
        count = int(np.floor(density * U.shape[1]))
        g = rng.standard_normal((count, U.shape[1]))
        x = (g / np.linalg.norm(g, axis=1, keepdims=True)) @ U.T
        e = rng.standard_normal((count, n)) * (sigma / np.sqrt(n))
        signals.append(x)
        points.append(x + e)
        labels.append(np.full(count, k))
    return Dataset(
        points=np.vstack(points),
        labels=np.concatenate(labels),
        signals=np.vstack(signals),
    )


def sample_noise(n: int, sigma: float, count: int, seed: int) -> np.ndarray:
    """``count`` draws of the ambient noise model, one per row."""
    rng = substream(seed, _NOISE_ONLY)
    return rng.standard_normal((count, n)) * (sigma / np.sqrt(n))


def generate(cfg: GenerationConfig, seed: int | None = None):
    """Ensemble and dataset for ``cfg``; ``seed`` overrides ``cfg.seed``."""
    cfg.validate()
    seed = cfg.seed if seed is None else seed
    ensemble = build_equiaffine_subspaces(cfg.n, cfg.L, cfg.d, cfg.rho, seed)
    return ensemble, sample_dataset(ensemble, cfg.density, cfg.sigma, seed)
