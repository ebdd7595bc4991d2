"""Local tangent-space estimation and closest-point projection oracles.

Tangent bases come from local PCA on the D+d nearest neighbors of each
training point (self included). The projection oracles (affine subspace,
unit sphere) have closed-form closest-point maps and are used to check
numerically that the Jacobian of the closest-point map on the manifold
equals the tangent projector T T'.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ENERGY_FRACTION = 0.98


@dataclass
class TangentBasis:
    point_index: int
    basis: np.ndarray  # (D, r), orthonormal columns, r possibly 0
    degenerate: bool = False

    @property
    def rank(self) -> int:
        return 0 if self.basis.size == 0 else self.basis.shape[1]


def knn_bruteforce(X: np.ndarray, i: int, k: int) -> np.ndarray:
    """Indices of the k nearest columns to column i (self included).

    Sorted ascending by Euclidean distance, ties by ascending index.
    """
    N = X.shape[1]
    if not 1 <= k <= N:
        raise ValueError(f"k={k} out of range for N={N}")
    diff = X - X[:, [i]]
    dist = np.einsum("dj,dj->j", diff, diff)
    order = np.argsort(dist, kind="stable")
    return order[:k]


def estimate_tangent(X: np.ndarray, i: int, d: int) -> TangentBasis:
    """Local-PCA tangent basis at column i from its D+d nearest neighbors.

    Keeps min(r98, d) principal directions, where r98 is the smallest
    rank capturing at least 98% of the local variance.
    """
    D, N = X.shape
    k = D + d
    if N < k:
        raise ValueError(f"need N >= D+d = {k} points, got {N}")
    nbrs = X[:, knn_bruteforce(X, i, k)]
    centered = nbrs - nbrs.mean(axis=1, keepdims=True)
    cov = centered @ centered.T / k
    evals, evecs = np.linalg.eigh(cov)
    evals = evals[::-1]
    evecs = evecs[:, ::-1]
    evals = np.maximum(evals, 0.0)
    total = evals.sum()
    if total <= 0.0:
        return TangentBasis(point_index=i, basis=np.zeros((D, 0)), degenerate=True)
    r98 = int(np.searchsorted(np.cumsum(evals) / total, ENERGY_FRACTION) + 1)
    r = min(r98, d)
    return TangentBasis(point_index=i, basis=np.ascontiguousarray(evecs[:, :r]))


def estimate_all_tangents(X: np.ndarray, d: int) -> list[TangentBasis]:
    return [estimate_tangent(X, i, d) for i in range(X.shape[1])]


def projector(T: TangentBasis | np.ndarray) -> np.ndarray:
    """Orthogonal projector T T' onto the tangent space (D x D)."""
    B = T.basis if isinstance(T, TangentBasis) else np.asarray(T)
    return B @ B.T


@dataclass
class ProjectionOracle:
    """Closest-point map onto an analytically known manifold.

    kind "affine-subspace": mean + basis basis' (x - mean).
    kind "unit-sphere": x / ||x||.
    """

    kind: str
    mean: np.ndarray | None = None
    basis: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("affine-subspace", "unit-sphere"):
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        if self.kind == "affine-subspace":
            gram = self.basis.T @ self.basis
            if not np.allclose(gram, np.eye(self.basis.shape[1]), atol=1e-10):
                raise ValueError("affine oracle basis must be orthonormal")


def oracle_project(o: ProjectionOracle, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if o.kind == "affine-subspace":
        return o.mean + o.basis @ (o.basis.T @ (x - o.mean))
    n = np.linalg.norm(x)
    if n == 0.0:
        raise ValueError("closest sphere point of the origin is undefined")
    return x / n


def oracle_tangent_projector(o: ProjectionOracle, m: np.ndarray) -> np.ndarray:
    """Analytic T T' at an on-manifold point m."""
    if o.kind == "affine-subspace":
        return o.basis @ o.basis.T
    m = np.asarray(m, dtype=np.float64)
    return np.eye(m.size) - np.outer(m, m) / (m @ m)


def oracle_jacobian_fd(o: ProjectionOracle, m: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian of the closest-point map at m.

    Entry (i, j) is the derivative of output coordinate j along input
    coordinate i.
    """
    m = np.asarray(m, dtype=np.float64)
    D = m.size
    J = np.empty((D, D))
    for i in range(D):
        e = np.zeros(D)
        e[i] = h
        J[i, :] = (oracle_project(o, m + e) - oracle_project(o, m - e)) / (2 * h)
    return J
