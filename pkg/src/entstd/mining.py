"""Online triplet mining: taxonomy, batch-all / batch-hard losses, batch sampling.

A triplet is (anchor, positive, negative): two distinct samples of one
class plus a sample of another class. With gap = d(anchor, negative) -
d(anchor, positive) and the hinge loss max(d_ap - d_an + margin, 0),
triplets fall into three categories:

    easy      gap > margin      (loss is zero, no learning signal)
    semihard  0 < gap < margin  (loss below the margin)
    hard      gap < 0           (negative closer than the positive)

Boundary ties (gap exactly 0 or exactly margin) classify as semihard,
keeping the category consistent with a zero-or-positive loss.

Batch-all averages the hinge over every valid non-easy triplet in the
batch; easy triplets are excluded from the average so they cannot dilute
it. Batch-hard selects, for each anchor, the farthest positive and the
nearest negative, yielding exactly one triplet per batch element.
Candidate ties break toward the lowest batch index for determinism.

Batches are drawn as contrastive groups: g same-class samples per group,
b groups of distinct classes per batch, so the effective batch size is
g*b. Classes with fewer than g (but at least 2) samples are topped up by
sampling with replacement; single-sample classes are excluded since they
cannot form a positive pair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .metrics import pairwise_distances

CATEGORIES = ("easy", "semihard", "hard")
STRATEGIES = ("batch-all", "batch-hard", "hybrid")


@dataclass(frozen=True)
class Triplet:
    anchor: int
    positive: int
    negative: int


@dataclass(frozen=True)
class MiningStrategy:
    """Mining schedule: a fixed strategy, or hybrid switching after an epoch."""

    kind: str
    switch_epoch: int | None = None

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {STRATEGIES}")
        if self.kind == "hybrid":
            if self.switch_epoch is None or self.switch_epoch < 1:
                raise ValueError("hybrid strategy requires a positive switch_epoch")

    def active(self, epoch: int) -> str:
        """Strategy in force for a 1-based epoch number."""
        if self.kind != "hybrid":
            return self.kind
        return "batch-all" if epoch <= self.switch_epoch else "batch-hard"


@dataclass(frozen=True)
class BatchPlan:
    """One batch: b groups of (entity_id, g sample indices into the train list)."""

    groups: tuple[tuple[str, tuple[int, ...]], ...]

    @property
    def size(self) -> int:
        return sum(len(members) for _, members in self.groups)

    def sample_indices(self) -> list[int]:
        return [i for _, members in self.groups for i in members]

    def labels(self) -> list[str]:
        return [eid for eid, members in self.groups for _ in members]


def triplet_loss(d_ap: float, d_an: float, margin: float) -> float:
    """Hinge loss max(d_ap - d_an + margin, 0)."""
    return max(d_ap - d_an + margin, 0.0)


def classify_triplet(d_ap: float, d_an: float, margin: float) -> str:
    """Easy / semihard / hard by the gap d_an - d_ap; boundary ties are semihard."""
    gap = d_an - d_ap
    if gap > margin:
        return "easy"
    if gap < 0.0:
        return "hard"
    return "semihard"


def enumerate_valid_triplets(labels: Sequence) -> list[Triplet]:
    """All (anchor, positive, negative) index triples valid for these labels.

    Ordered lexicographically over the index triple for determinism.
    """
    n = len(labels)
    out = []
    for a in range(n):
        for p in range(n):
            if p == a or labels[p] != labels[a]:
                continue
            for neg in range(n):
                if labels[neg] != labels[a]:
                    out.append(Triplet(a, p, neg))
    return out


def _label_codes(labels: Sequence) -> np.ndarray:
    codes: dict = {}
    return np.array([codes.setdefault(lab, len(codes)) for lab in labels], dtype=np.int64)


def _masks(codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    same = codes[:, None] == codes[None, :]
    np.fill_diagonal(same, False)
    diff = codes[:, None] != codes[None, :]
    return same, diff


def batch_all_core(dist: np.ndarray, codes: np.ndarray, margin: float):
    """Batch-all loss, category counts, and d-loss/d-distance coefficients.

    The coefficient matrix K satisfies dL/d dist[i, j] = K[i, j] for the
    averaged hinge, treating the non-easy selection as fixed.
    """
    same, diff = _masks(codes)
    valid = same[:, :, None] & diff[:, None, :]
    n_valid = int(valid.sum())
    gap = dist[:, None, :] - dist[:, :, None]  # d_an - d_ap per (a, p, n)
    easy = valid & (gap > margin)
    hard = valid & (gap < 0.0)
    counts = {
        "easy": int(easy.sum()),
        "hard": int(hard.sum()),
    }
    counts["semihard"] = n_valid - counts["easy"] - counts["hard"]
    selected = valid & ~easy
    n_sel = int(selected.sum())
    coef = np.zeros_like(dist)
    if n_sel == 0:
        return 0.0, counts, coef
    hinge = np.maximum(margin - gap, 0.0)
    loss = float(hinge[selected].sum()) / n_sel
    active = selected & (hinge > 0.0)
    coef = (active.sum(axis=2) - active.sum(axis=1)).astype(np.float64) / n_sel
    return loss, counts, coef


def batch_hard_core(dist: np.ndarray, codes: np.ndarray, margin: float):
    """Batch-hard loss, per-anchor (d_ap_max, d_an_min), and coefficients."""
    same, diff = _masks(codes)
    b = dist.shape[0]
    pos_masked = np.where(same, dist, -np.inf)
    neg_masked = np.where(diff, dist, np.inf)
    hardest_pos = pos_masked.argmax(axis=1)  # first max: lowest-index tie break
    hardest_neg = neg_masked.argmin(axis=1)
    rows = np.arange(b)
    d_ap = dist[rows, hardest_pos]
    d_an = dist[rows, hardest_neg]
    losses = np.maximum(d_ap - d_an + margin, 0.0)
    loss = float(losses.mean())
    per_anchor = [(float(d_ap[a]), float(d_an[a])) for a in range(b)]
    coef = np.zeros_like(dist)
    act = losses > 0.0
    np.add.at(coef, (rows[act], hardest_pos[act]), 1.0 / b)
    np.add.at(coef, (rows[act], hardest_neg[act]), -1.0 / b)
    return loss, per_anchor, coef


def _check_batch_all_preconditions(codes: np.ndarray) -> None:
    _, class_sizes = np.unique(codes, return_counts=True)
    if len(class_sizes) < 2:
        raise ValueError("degenerate batch: at least two classes are required")
    if class_sizes.max() < 2:
        raise ValueError("degenerate batch: no class has two samples")


def _check_batch_hard_preconditions(codes: np.ndarray) -> None:
    _, class_sizes = np.unique(codes, return_counts=True)
    if len(class_sizes) < 2:
        raise ValueError("degenerate batch: at least two classes are required")
    if class_sizes.min() < 2:
        raise ValueError("batch-hard requires every class to have at least two samples")


def batch_all_loss(
    embeddings: np.ndarray, labels: Sequence, margin: float, metric: str
) -> tuple[float, dict[str, int]]:
    """Average hinge over all valid hard and semihard triplets in the batch.

    Returns (loss, category counts). The counts partition the valid-triplet
    set; if every valid triplet is easy the loss is 0.
    """
    codes = _label_codes(labels)
    _check_batch_all_preconditions(codes)
    dist = pairwise_distances(metric, np.asarray(embeddings, dtype=np.float64))
    loss, counts, _ = batch_all_core(dist, codes, margin)
    return loss, counts


def batch_hard_loss(
    embeddings: np.ndarray, labels: Sequence, margin: float, metric: str
) -> tuple[float, list[tuple[float, float]]]:
    """Mean hinge over each anchor's hardest positive and hardest negative.

    Returns (loss, per-anchor (d_ap_max, d_an_min) pairs); the triplet count
    always equals the batch size.
    """
    codes = _label_codes(labels)
    _check_batch_hard_preconditions(codes)
    dist = pairwise_distances(metric, np.asarray(embeddings, dtype=np.float64))
    loss, per_anchor, _ = batch_hard_core(dist, codes, margin)
    return loss, per_anchor


def sample_batches(
    train: Sequence, g: int, b: int, seed: int, epoch: int
) -> list[BatchPlan]:
    """Contrastive-group batches for one epoch, deterministic under (seed, epoch).

    ``train`` is a sequence of records with an ``entity_id`` attribute.
    Each epoch shuffles the eligible classes (those with at least two
    samples) and emits floor(eligible / b) batches of b distinct classes,
    so every eligible class is visited at most once per epoch.
    """
    if g < 2 or b < 2:
        raise ValueError("group size g and groups-per-batch b must both be >= 2")
    members: dict[str, list[int]] = {}
    for i, rec in enumerate(train):
        members.setdefault(rec.entity_id, []).append(i)
    eligible = [eid for eid, idxs in members.items() if len(idxs) >= 2]
    if len(eligible) < b:
        raise ValueError(
            f"need at least {b} classes with >= 2 samples, found {len(eligible)}"
        )
    rng = random.Random(f"entstd-batch:{seed}:{epoch}")
    order = eligible[:]
    rng.shuffle(order)
    plans = []
    for start in range(0, (len(order) // b) * b, b):
        groups = []
        for eid in order[start : start + b]:
            pool = members[eid]
            if len(pool) >= g:
                chosen = rng.sample(pool, g)
            else:
                chosen = pool + [rng.choice(pool) for _ in range(g - len(pool))]
            groups.append((eid, tuple(chosen)))
        plans.append(BatchPlan(groups=tuple(groups)))
    return plans
