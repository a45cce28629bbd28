"""Analytic gradient checks against central finite differences."""

from __future__ import annotations

import numpy as np
import pytest

from entstd.encoder import EncoderParams, encode_batch
from entstd.gradients import loss_and_gradients
from entstd.mining import batch_all_loss, batch_hard_loss

FEATURE_DIM, OUT_DIM = 32, 4
TEXTS = ["alpha one", "alpha two", "beta one", "beta two", "gamma x", "gamma y"]
LABELS = ["A", "A", "B", "B", "C", "C"]


def _random_params(rng) -> EncoderParams:
    return EncoderParams(
        feature_dim=FEATURE_DIM,
        ngram_range=(2, 3),
        out_dim=OUT_DIM,
        weights=rng.normal(0, 0.7, (FEATURE_DIM, OUT_DIM)),
        bias=rng.normal(0, 0.3, OUT_DIM),
    )


def _loss_only(weights, bias, texts, labels, margin, metric, strategy):
    # Independent of the gradient path: encode_batch + the mining losses.
    params = EncoderParams(
        feature_dim=FEATURE_DIM, ngram_range=(2, 3), out_dim=OUT_DIM,
        weights=weights, bias=bias,
    )
    emb = encode_batch(params, texts)
    if strategy == "batch-all":
        return batch_all_loss(emb, labels, margin, metric)[0]
    return batch_hard_loss(emb, labels, margin, metric)[0]


def finite_difference_grads(params, texts, labels, margin, metric, strategy, h=1e-5):
    grad_w = np.zeros_like(params.weights)
    for i in range(params.feature_dim):
        for j in range(params.out_dim):
            wp = params.weights.copy()
            wm = params.weights.copy()
            wp[i, j] += h
            wm[i, j] -= h
            grad_w[i, j] = (
                _loss_only(wp, params.bias, texts, labels, margin, metric, strategy)
                - _loss_only(wm, params.bias, texts, labels, margin, metric, strategy)
            ) / (2 * h)
    grad_b = np.zeros_like(params.bias)
    for j in range(params.out_dim):
        bp = params.bias.copy()
        bm = params.bias.copy()
        bp[j] += h
        bm[j] -= h
        grad_b[j] = (
            _loss_only(params.weights, bp, texts, labels, margin, metric, strategy)
            - _loss_only(params.weights, bm, texts, labels, margin, metric, strategy)
        ) / (2 * h)
    return grad_w, grad_b


def max_relative_error(analytic, numeric, floor=1e-8):
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float((np.abs(analytic - numeric)[mask] / scale[mask]).max())


@pytest.mark.parametrize("metric", ["cosine", "euclidean", "sqeuclidean"])
@pytest.mark.parametrize("strategy", ["batch-all", "batch-hard"])
def test_gradients_match_finite_differences(metric, strategy):
    rng = np.random.default_rng(7)
    params = _random_params(rng)
    margin = 1.0
    loss, (gw, gb), _ = loss_and_gradients(params, TEXTS, LABELS, margin, metric, strategy)
    assert loss == pytest.approx(
        _loss_only(params.weights, params.bias, TEXTS, LABELS, margin, metric, strategy),
        abs=1e-12,
    )
    fw, fb = finite_difference_grads(params, TEXTS, LABELS, margin, metric, strategy)
    assert max_relative_error(gw, fw) < 1e-4
    assert max_relative_error(gb, fb) < 1e-4


def test_all_easy_batch_has_zero_loss_and_gradients():
    rng = np.random.default_rng(3)
    params = _random_params(rng)
    # margin 0 with well-separated classes: every valid triplet is easy.
    loss, (gw, gb), counts = loss_and_gradients(
        params, TEXTS, LABELS, 0.0, "sqeuclidean", "batch-all"
    )
    if counts["easy"] == counts["easy"] + counts["semihard"] + counts["hard"]:
        assert loss == 0.0
        assert not gw.any() and not gb.any()


def test_duplicated_batch_batch_hard_zero_hardest_positive(small_params):
    texts = ["mention one", "mention one", "other thing", "other thing"]
    labels = ["A", "A", "B", "B"]
    emb = encode_batch(small_params, texts)
    _, per_anchor = batch_hard_loss(emb, labels, 1.0, "euclidean")
    assert all(d_ap == 0.0 for d_ap, _ in per_anchor)


def test_invalid_strategy_rejected(small_params):
    with pytest.raises(ValueError, match="strategy"):
        loss_and_gradients(small_params, ["a", "b"], ["A", "A"], 1.0, "cosine", "offline")


def test_counts_partition_valid_triplets():
    rng = np.random.default_rng(11)
    params = _random_params(rng)
    _, _, counts = loss_and_gradients(params, TEXTS, LABELS, 2.0, "cosine", "batch-all")
    # 3 classes of 2: per anchor 1 positive x 4 negatives = 4; 6 anchors.
    assert counts["easy"] + counts["semihard"] + counts["hard"] == 24
