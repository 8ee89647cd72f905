"""Normalized spectral clustering of an affinity graph.

Ng-Jordan-Weiss variant: embed nodes with the eigenvectors of
``I - D^{-1/2} G D^{-1/2}`` belonging to the smallest eigenvalues,
row-normalize, then run seeded k-means with restarts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SpectralConfig",
    "Labeling",
    "normalized_laplacian",
    "symmetric_eig",
    "kmeans",
    "spectral_cluster",
    "estimate_num_clusters",
]


@dataclass(frozen=True)
class SpectralConfig:
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 300
    seed: int = 0
    eig_tol: float = 1e-10

    def __post_init__(self):
        if self.kmeans_restarts < 1:
            raise InvalidInputError("kmeans_restarts must be >= 1")
        if self.kmeans_max_iter < 1:
            raise InvalidInputError("kmeans_max_iter must be >= 1")


@dataclass
class Labeling:
    labels: np.ndarray
    L: int
    inertia: float = 0.0


def _matrix(graph):
    return np.asarray(getattr(graph, "g", graph), dtype=float)


def normalized_laplacian(graph) -> np.ndarray:
    """``I - D^{-1/2} G D^{-1/2}``; isolated vertices get ``D^{-1/2} = 0``."""
    G = _matrix(graph)
    deg = G.sum(axis=1)
    inv_sqrt = np.zeros_like(deg)
    pos = deg > 0
    inv_sqrt[pos] = 1.0 / np.sqrt(deg[pos])
    return np.eye(G.shape[0]) - inv_sqrt[:, None] * G * inv_sqrt[None, :]


def _round_robin(n):
    """Pairings for one Jacobi sweep: ``n - 1`` (or ``n``) rounds of disjoint pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[k], players[m - 1 - k]) for k in range(m // 2)]
        rounds.append([(min(p, q), max(p, q)) for p, q in pairs if p >= 0 and q >= 0])
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def symmetric_eig(M, tol: float = 1e-10, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits every index pair once in round-robin order; within a
    round the pairs are disjoint, so their rotations commute and are applied
    together. Stops when the off-diagonal Frobenius norm drops below
    ``tol * 1e-3 * ||M||_F``.

    Returns
    -------
    values : (n,) array, ascending
    vectors : (n, n) array, orthonormal columns matching ``values``
    """
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    scale = np.linalg.norm(A)
    if not np.all(np.isfinite(A)) or np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * max(1.0, scale):
        raise InvalidInputError("matrix must be finite and symmetric")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    if n > 1 and scale > 0:
        rounds = [(np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in _round_robin(n)]
        target = tol * 1e-3 * scale
        for _ in range(max_sweeps):
            off = np.linalg.norm(A - np.diag(np.diag(A)))
            if off <= target:
                break
            for P, Q in rounds:
                apq = A[P, Q]
                app, aqq = A[P, P], A[Q, Q]
                # entries already below rounding of both diagonals are dropped
                g = 100.0 * np.abs(apq)
                keep = (np.abs(app) + g != np.abs(app)) | (np.abs(aqq) + g != np.abs(aqq))
                A[P[~keep], Q[~keep]] = A[Q[~keep], P[~keep]] = 0.0
                if not np.any(keep):
                    continue
                P, Q, apq, app, aqq = P[keep], Q[keep], apq[keep], app[keep], aqq[keep]
                theta = (aqq - app) / (2.0 * apq)
                big = np.abs(theta) > 1e150
                safe = np.where(big, 1.0, theta)
                t = np.where(
                    big,
                    0.5 / np.where(big, theta, 1.0),
                    np.sign(safe) / (np.abs(safe) + np.sqrt(safe * safe + 1.0)),
                )
                t[theta == 0.0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                J = np.eye(n)
                J[P, P] = c
                J[Q, Q] = c
                J[P, Q] = s
                J[Q, P] = -s
                A = J.T @ A @ J
                A[P, Q] = A[Q, P] = 0.0
                V = V @ J
    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order]


def _kmeans_pp(X, k, rng):
    N = X.shape[0]
    centers = [X[rng.integers(N)]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(N))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, N - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _lloyd(X, centers, max_iter):
    k = centers.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        # empty clusters take the point currently farthest from its center
        for j in range(k):
            if not np.any(new == j):
                far = int(np.argmax(d2[np.arange(X.shape[0]), new]))
                new[far] = j
                d2[far, j] = 0.0
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([X[labels == j].mean(axis=0) for j in range(k)])
    inertia = float(np.sum((X - centers[labels]) ** 2))
    return labels, inertia


def kmeans(X, k: int, restarts: int = 10, max_iter: int = 300, seed: int = 0):
    """Best-inertia k-means over ``restarts`` k-means++ starts.

    Restart ``r`` draws from a generator seeded with ``(seed, r)``; ties in
    inertia go to the earliest restart.
    """
    X = np.asarray(X, dtype=float)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        labels, inertia = _lloyd(X, _kmeans_pp(X, k, rng), max_iter)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return best


def _canonical(labels):
    # relabel by first appearance so equal partitions give equal arrays
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    return np.argsort(np.argsort(first))[inverse]


def spectral_cluster(graph, L: int, cfg: SpectralConfig | None = None) -> Labeling:
    cfg = cfg or SpectralConfig()
    G = _matrix(graph)
    N = G.shape[0]
    if not 1 <= L <= N:
        raise InvalidInputError(f"cluster count must lie in [1, {N}], got {L}")
    if L == 1:
        return Labeling(labels=np.zeros(N, dtype=int), L=1)
    _, vecs = symmetric_eig(normalized_laplacian(G), cfg.eig_tol)
    E = vecs[:, :L]
    norms = np.linalg.norm(E, axis=1, keepdims=True)
    E = np.divide(E, norms, out=np.zeros_like(E), where=norms > 1e-12)
    labels, inertia = kmeans(E, L, cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.seed)
    return Labeling(labels=_canonical(labels), L=L, inertia=inertia)


def estimate_num_clusters(graph, max_L: int, tol: float = 1e-10) -> int:
    """Largest eigengap ``mu_{k+1} - mu_k`` for ``k = 1..max_L``; ties and
    near-ties within ``1e-12`` go to the smaller ``k``."""
    G = _matrix(graph)
    N = G.shape[0]
    if not 1 <= max_L <= N:
        raise InvalidInputError(f"max_L must lie in [1, {N}]")
    vals, _ = symmetric_eig(normalized_laplacian(G), tol)
    top = min(max_L, N - 1)
    if top < 1:
        return 1
    gaps = vals[1:top + 1] - vals[:top]
    return int(np.flatnonzero(gaps >= gaps.max() - 1e-12)[0]) + 1
