"""Exact analytic gradients of the mining losses w.r.t. encoder parameters.

The chain runs loss -> pairwise distances -> embeddings -> pre-activations
-> weights/bias. Both mining strategies reduce to a coefficient matrix
K[i, j] = dL/d dist(e_i, e_j) (treating the triplet selection as fixed at
the current parameters, the standard subgradient convention for hinge and
max/min selections). From K the embedding gradient is assembled per
metric, then pushed through tanh and the sparse feature products.

Distance partials used here, for d = d(u, v):

    sqeuclidean  dd/du = 2 (u - v)
    euclidean    dd/du = (u - v) / d        (0 when d = 0)
    cosine       dd/du = (s / (|u|^3 |v|)) u - v / (|u| |v|),  s = u.v
"""

from __future__ import annotations

import numpy as np

from .encoder import EncoderParams, SparseFeatures, featurize
from .metrics import check_metric, pairwise_distances
from .mining import (
    _check_batch_all_preconditions,
    _check_batch_hard_preconditions,
    _label_codes,
    batch_all_core,
    batch_hard_core,
)


def _embedding_gradient(metric: str, emb: np.ndarray, dist: np.ndarray, coef: np.ndarray) -> np.ndarray:
    # Distances are symmetric, so dL/de_k collects both the coef[k, j] and
    # coef[j, k] contributions through dd(e_k, e_j)/de_k.
    c = coef + coef.T
    if metric == "sqeuclidean":
        return 2.0 * (c.sum(axis=1)[:, None] * emb - c @ emb)
    if metric == "euclidean":
        with np.errstate(divide="ignore", invalid="ignore"):
            m = np.where(dist > 0.0, c / dist, 0.0)
        return m.sum(axis=1)[:, None] * emb - m @ emb
    # cosine
    norms = np.linalg.norm(emb, axis=1)
    sims = emb @ emb.T
    a = c * sims / (norms[:, None] ** 3 * norms[None, :])
    b = c / np.outer(norms, norms)
    return a.sum(axis=1)[:, None] * emb - b @ emb


def loss_and_gradients(
    params: EncoderParams,
    texts: list[str],
    labels: list,
    margin: float,
    metric: str,
    strategy: str,
    features: list[SparseFeatures] | None = None,
) -> tuple[float, tuple[np.ndarray, np.ndarray], dict[str, int]]:
    """Strategy loss on the encoded batch plus its exact parameter gradients.

    ``strategy`` is "batch-all" or "batch-hard". Returns
    (loss, (weight grads, bias grads), triplet category counts); gradients
    have the same shapes as params.weights and params.bias. Precomputed
    ``features`` may be passed to skip re-featurizing a cached batch.

    The loss value is by construction identical to the corresponding
    mining-module loss on encode_batch output.
    """
    check_metric(metric)
    if strategy not in ("batch-all", "batch-hard"):
        raise ValueError(f"strategy must be batch-all or batch-hard, got {strategy!r}")
    if features is None:
        features = [featurize(t, params.feature_dim, params.ngram_range) for t in texts]
    codes = _label_codes(labels)
    if strategy == "batch-all":
        _check_batch_all_preconditions(codes)
    else:
        _check_batch_hard_preconditions(codes)

    emb = np.empty((len(features), params.out_dim))
    for i, f in enumerate(features):
        emb[i] = np.tanh(f.values @ params.weights[f.indices] + params.bias)

    dist = pairwise_distances(metric, emb)
    if strategy == "batch-all":
        loss, counts, coef = batch_all_core(dist, codes, margin)
    else:
        loss, per_anchor, coef = batch_hard_core(dist, codes, margin)
        counts = _hard_counts(per_anchor, margin)

    grad_emb = _embedding_gradient(metric, emb, dist, coef)
    grad_z = grad_emb * (1.0 - emb**2)
    grad_w = np.zeros_like(params.weights)
    for i, f in enumerate(features):
        grad_w[f.indices] += f.values[:, None] * grad_z[i][None, :]
    grad_b = grad_z.sum(axis=0)
    return loss, (grad_w, grad_b), counts


def _hard_counts(per_anchor, margin: float) -> dict[str, int]:
    counts = {"easy": 0, "semihard": 0, "hard": 0}
    for d_ap, d_an in per_anchor:
        gap = d_an - d_ap
        if gap > margin:
            counts["easy"] += 1
        elif gap < 0.0:
            counts["hard"] += 1
        else:
            counts["semihard"] += 1
    return counts
