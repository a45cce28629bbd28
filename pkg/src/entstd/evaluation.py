"""Retrieval evaluation: top-k accuracy, ROC against unseen negatives, timing.

ROC protocol: each mention is scored by its distance to the nearest
indexed entity, and a threshold sweep over the observed score range
accepts mentions whose score falls at or below the threshold. The false
positive rate is the accepted fraction of the out-of-KB negatives. Two
true-positive readings are supported: the strict default counts an
accepted positive only when its top-1 entity is the gold one; the
acceptance-only reading counts any accepted positive.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from statistics import median
from typing import Callable, Sequence

import numpy as np

from .corpus import MentionRecord
from .errors import DataError
from .index import EmbeddingIndex, query

EncodeBatch = Callable[[list[str]], np.ndarray]

DEFAULT_KS = (1, 3, 5)
RECORD_DEPTH = 5

# Mentions are encoded in chunks so wide encodings (e.g. TF-IDF) never
# materialize the whole test set as one dense matrix.
ENCODE_CHUNK = 256


def _encode_chunked(encode_batch: EncodeBatch, surfaces: list[str]):
    for start in range(0, len(surfaces), ENCODE_CHUNK):
        yield from encode_batch(surfaces[start : start + ENCODE_CHUNK])


@dataclass(frozen=True)
class MentionOutcome:
    surface: str
    gold_id: str
    predictions: tuple[tuple[str, float], ...]  # top-5 (entity_id, distance)


@dataclass(frozen=True)
class EvalReport:
    top_k: dict[int, float]
    n_test: int
    records: tuple[MentionOutcome, ...]


@dataclass(frozen=True)
class RocReport:
    points: tuple[tuple[float, float, float], ...]  # (threshold, fpr, tpr)
    auc: float


def topk_accuracy(
    index: EmbeddingIndex,
    encode_batch: EncodeBatch,
    test: Sequence[MentionRecord],
    ks: Sequence[int] = DEFAULT_KS,
    zero_query: str = "error",
) -> EvalReport:
    """Fraction of mentions whose gold entity ranks in the top k, per k.

    Encodes each mention once and scans the precomputed index; per-mention
    top-5 outcomes are kept for error analysis.
    """
    if not test:
        raise DataError("empty test split: top-k accuracy is undefined")
    depth = max(max(ks), RECORD_DEPTH)
    embeddings = _encode_chunked(encode_batch, [r.surface for r in test])
    records = []
    hits = {k: 0 for k in ks}
    for rec, emb in zip(test, embeddings):
        ranked = query(index, emb, depth, zero_query=zero_query)
        ranked_ids = [eid for eid, _ in ranked]
        for k in ks:
            if rec.entity_id in ranked_ids[:k]:
                hits[k] += 1
        records.append(
            MentionOutcome(
                surface=rec.surface,
                gold_id=rec.entity_id,
                predictions=tuple(ranked[:RECORD_DEPTH]),
            )
        )
    top_k = {k: hits[k] / len(test) for k in ks}
    return EvalReport(top_k=top_k, n_test=len(test), records=tuple(records))


def roc_from_scores(
    pos_scores: Sequence[float],
    pos_correct: Sequence[bool],
    neg_scores: Sequence[float],
    n_thresholds: int = 201,
    strict_tpr: bool = True,
) -> RocReport:
    """ROC sweep over precomputed scores (lower score = stronger match)."""
    if len(pos_scores) == 0 or len(neg_scores) == 0:
        raise DataError("ROC needs at least one positive and one negative score")
    if len(pos_scores) != len(pos_correct):
        raise ValueError("pos_scores and pos_correct lengths differ")
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    correct = np.asarray(pos_correct, dtype=bool)
    lo = min(pos.min(), neg.min())
    hi = max(pos.max(), neg.max())
    thresholds = np.linspace(lo, hi, n_thresholds)
    points = []
    for t in thresholds:
        fpr = float(np.mean(neg <= t))
        accepted = pos <= t
        if strict_tpr:
            accepted = accepted & correct
        points.append((float(t), fpr, float(np.mean(accepted))))
    fprs = np.array([p[1] for p in points])
    tprs = np.array([p[2] for p in points])
    auc = float(np.trapezoid(tprs, fprs))
    return RocReport(points=tuple(points), auc=auc)


def roc_curve(
    index: EmbeddingIndex,
    encode_batch: EncodeBatch,
    positives: Sequence[MentionRecord],
    negatives: Sequence[str],
    n_thresholds: int = 201,
    strict_tpr: bool = True,
    zero_query: str = "error",
) -> RocReport:
    """ROC of the retriever on test mentions vs out-of-KB negative surfaces."""
    if not positives or not negatives:
        raise DataError("ROC needs nonempty positives and negatives")
    pos_scores, pos_correct = [], []
    for rec, emb in zip(positives, _encode_chunked(encode_batch, [r.surface for r in positives])):
        top = query(index, emb, 1, zero_query=zero_query)[0]
        pos_scores.append(top[1])
        pos_correct.append(top[0] == rec.entity_id)
    neg_scores = [
        query(index, emb, 1, zero_query=zero_query)[0][1]
        for emb in _encode_chunked(encode_batch, list(negatives))
    ]
    return roc_from_scores(pos_scores, pos_correct, neg_scores, n_thresholds, strict_tpr)


def benchmark_inference(
    index: EmbeddingIndex,
    encode_batch: EncodeBatch,
    test: Sequence[MentionRecord],
    repeats: int = 10,
) -> tuple[float, list[float]]:
    """Median wall-clock seconds to encode and retrieve the full test set."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    surfaces = [r.surface for r in test]
    runs = []
    for _ in range(repeats):
        start = time.perf_counter()
        for emb in _encode_chunked(encode_batch, surfaces):
            query(index, emb, 1)
        runs.append(time.perf_counter() - start)
    return median(runs), runs


def write_eval_report(report: EvalReport, path) -> None:
    """Line-delimited export: one summary line, then one line per mention."""
    with open(path, "w", encoding="utf-8") as fh:
        summary = {
            "type": "summary",
            "n_test": report.n_test,
            "top_k": {str(k): report.top_k[k] for k in sorted(report.top_k)},
        }
        fh.write(json.dumps(summary, ensure_ascii=False) + "\n")
        for rec in report.records:
            fh.write(
                json.dumps(
                    {
                        "type": "mention",
                        "surface": rec.surface,
                        "gold": rec.gold_id,
                        "predictions": [[eid, d] for eid, d in rec.predictions],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_roc_report(report: RocReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"type": "summary", "auc": report.auc}) + "\n")
        for t, fpr, tpr in report.points:
            fh.write(json.dumps({"type": "point", "threshold": t, "fpr": fpr, "tpr": tpr}) + "\n")


def write_roc_points_tsv(report: RocReport, path) -> None:
    """Two-column (fpr, tpr) table for external plotters."""
    with open(path, "w", encoding="utf-8") as fh:
        for _, fpr, tpr in report.points:
            fh.write(f"{fpr!r}\t{tpr!r}\n")
