"""Distance measures between embedding vectors.

Three metrics are supported: ``cosine`` (1 minus cosine similarity, range
[0, 2]), ``euclidean``, and ``sqeuclidean`` (the square of the Euclidean
distance). Cosine distance is undefined for zero vectors and raises by
default; retrieval code paths may opt into a max-distance fallback for
degenerate queries (e.g. all-OOV TF-IDF encodings).
"""

from __future__ import annotations

import numpy as np

METRICS = ("cosine", "euclidean", "sqeuclidean")

# Similarity of a zero vector is taken as 0, so its cosine distance is 1.
ZERO_COSINE_DISTANCE = 1.0


def check_metric(metric: str) -> str:
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    return metric


def distance(metric: str, u: np.ndarray, v: np.ndarray) -> float:
    """Distance between two vectors under the given metric.

    Raises ValueError on dimension mismatch, and on a zero vector under
    cosine (a zero embedding indicates an untrained or degenerate encoder).
    """
    check_metric(metric)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if metric == "cosine":
        nu = float(np.linalg.norm(u))
        nv = float(np.linalg.norm(v))
        if nu == 0.0 or nv == 0.0:
            raise ValueError("cosine distance undefined for zero vectors")
        return 1.0 - float(np.dot(u, v)) / (nu * nv)
    diff = u - v
    sq = float(np.dot(diff, diff))
    if metric == "sqeuclidean":
        return sq
    return float(np.sqrt(sq))


def pairwise_distances(metric: str, points: np.ndarray) -> np.ndarray:
    """Symmetric matrix of distances between all rows of ``points``."""
    check_metric(metric)
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be a 2-d array")
    if metric == "cosine":
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("cosine distance undefined for zero vectors")
        sims = (x @ x.T) / np.outer(norms, norms)
        d = 1.0 - sims
        np.fill_diagonal(d, 0.0)
        return d
    diff = x[:, None, :] - x[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    if metric == "sqeuclidean":
        return sq
    return np.sqrt(sq)


def distances_to(
    metric: str,
    query: np.ndarray,
    points: np.ndarray,
    zero_query: str = "error",
) -> np.ndarray:
    """Distances from one query vector to every row of ``points``.

    ``zero_query`` controls the cosine behaviour for a zero-norm query:
    ``"error"`` raises, ``"max"`` reports ``ZERO_COSINE_DISTANCE`` to every
    row (the similarity-zero reading used by the TF-IDF retrieval path).
    """
    check_metric(metric)
    q = np.asarray(query, dtype=np.float64)
    x = np.asarray(points, dtype=np.float64)
    if q.ndim != 1 or x.ndim != 2 or x.shape[1] != q.shape[0]:
        raise ValueError(f"dimension mismatch: query {q.shape} vs points {x.shape}")
    if metric == "cosine":
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            if zero_query == "max":
                return np.full(x.shape[0], ZERO_COSINE_DISTANCE)
            raise ValueError("cosine distance undefined for zero query vector")
        norms = np.linalg.norm(x, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("cosine distance undefined for zero vectors in index")
        return 1.0 - (x @ q) / (norms * qn)
    diff = x - q
    sq = np.einsum("ij,ij->i", diff, diff)
    if metric == "sqeuclidean":
        return sq
    return np.sqrt(sq)
