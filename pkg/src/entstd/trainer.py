"""Gradient-descent training over contrastive-group batches, plus k-fold CV.

Each epoch draws a fresh permutation of eligible classes into batches and
applies one optimizer step per batch. Under the hybrid schedule the first
span of epochs mines batch-all and the remainder batch-hard; the switch
defaults to the epoch midpoint. All randomness derives from the config
seed and the epoch number, so a rerun with identical corpus, config, and
init reproduces the loss history bit for bit.

Canonical entity names participate as training samples of their class by
default: the retrieval index embeds entity names, so the names must lie in
the learned space.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .corpus import Corpus, MentionRecord
from .encoder import EncoderParams, encode_batch, featurize
from .errors import EntstdError
from .evaluation import topk_accuracy
from .gradients import loss_and_gradients
from .index import build_index
from .metrics import check_metric
from .mining import MiningStrategy, sample_batches

logger = logging.getLogger(__name__)

OPTIMIZERS = ("adam", "sgd")


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters.

    Defaults mirror the strongest published setting at desk scale: margin
    2, group size 10, 16 groups per batch (effective batch 160), cosine
    distance, hybrid mining switching at the epoch midpoint.
    """

    margin: float = 2.0
    learning_rate: float = 1e-2
    g: int = 10
    b: int = 16
    epochs: int = 80
    strategy: str = "hybrid"
    switch_epoch: int | None = None  # hybrid only; None means epochs // 2
    metric: str = "cosine"
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    include_names: bool = True
    include_kb_mentions: bool = True

    def __post_init__(self):
        check_metric(self.metric)
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.g < 2 or self.b < 2:
            raise ValueError("g and b must both be >= 2")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.strategy not in ("batch-all", "batch-hard", "hybrid"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.strategy == "hybrid" and self.switch_epoch is not None:
            if not (1 <= self.switch_epoch < max(self.epochs, 2)):
                raise ValueError("hybrid switch_epoch must satisfy 1 <= switch_epoch < epochs")

    def mining_strategy(self) -> MiningStrategy:
        if self.strategy != "hybrid":
            return MiningStrategy(self.strategy)
        switch = self.switch_epoch if self.switch_epoch is not None else max(self.epochs // 2, 1)
        return MiningStrategy("hybrid", switch_epoch=switch)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    strategy: str
    mean_loss: float
    counts: dict[str, int]
    val_top1: float | None = None


@dataclass(frozen=True)
class TrainHistory:
    records: tuple[EpochRecord, ...] = ()

    def losses(self) -> list[float]:
        return [r.mean_loss for r in self.records]


def training_samples(corpus: Corpus, cfg: TrainConfig) -> list[MentionRecord]:
    """Train mentions, plus canonical names and KB mentions as class samples."""
    samples = list(corpus.train)
    if cfg.include_names:
        samples.extend(MentionRecord(surface=e.canonical_name, entity_id=e.id) for e in corpus.entities)
    if cfg.include_kb_mentions:
        for e in corpus.entities:
            samples.extend(MentionRecord(surface=m, entity_id=e.id) for m in e.kb_mentions)
    return samples


class _Optimizer:
    def __init__(self, cfg: TrainConfig, params: EncoderParams):
        self.cfg = cfg
        self.weights = params.weights.astype(np.float64).copy()
        self.bias = params.bias.astype(np.float64).copy()
        if cfg.optimizer == "adam":
            self.m_w = np.zeros_like(self.weights)
            self.v_w = np.zeros_like(self.weights)
            self.m_b = np.zeros_like(self.bias)
            self.v_b = np.zeros_like(self.bias)
            self.t = 0

    def step(self, grad_w: np.ndarray, grad_b: np.ndarray) -> None:
        lr = self.cfg.learning_rate
        if self.cfg.optimizer == "sgd":
            self.weights -= lr * grad_w
            self.bias -= lr * grad_b
            return
        b1, b2, eps = self.cfg.adam_beta1, self.cfg.adam_beta2, self.cfg.adam_eps
        self.t += 1
        for grad, m, v, target in (
            (grad_w, self.m_w, self.v_w, self.weights),
            (grad_b, self.m_b, self.v_b, self.bias),
        ):
            m *= b1
            m += (1 - b1) * grad
            v *= b2
            v += (1 - b2) * grad**2
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            target -= lr * m_hat / (np.sqrt(v_hat) + eps)

    def params(self, template: EncoderParams) -> EncoderParams:
        return replace(template, weights=self.weights.copy(), bias=self.bias.copy())


def train(
    corpus: Corpus,
    cfg: TrainConfig,
    init: EncoderParams,
    val_every: int = 0,
) -> tuple[EncoderParams, TrainHistory]:
    """Train the encoder on the corpus; returns final params and full history.

    With ``val_every`` > 0, every val_every-th epoch also records top-1
    accuracy of the current encoder on the corpus test split against a
    canonical-name index.
    """
    samples = training_samples(corpus, cfg)
    schedule = cfg.mining_strategy()
    opt = _Optimizer(cfg, init)
    feature_cache = [
        featurize(rec.surface, init.feature_dim, init.ngram_range) for rec in samples
    ]
    records = []
    for epoch in range(1, cfg.epochs + 1):
        strategy = schedule.active(epoch)
        try:
            plans = sample_batches(samples, cfg.g, cfg.b, cfg.seed, epoch)
        except ValueError as exc:
            raise EntstdError(f"epoch {epoch}: {exc}") from exc
        batch_losses = []
        counts = {"easy": 0, "semihard": 0, "hard": 0}
        params_now = opt.params(init)
        for batch_no, plan in enumerate(plans):
            idxs = plan.sample_indices()
            texts = [samples[i].surface for i in idxs]
            try:
                loss, (grad_w, grad_b), batch_counts = loss_and_gradients(
                    params_now,
                    texts,
                    plan.labels(),
                    cfg.margin,
                    cfg.metric,
                    strategy,
                    features=[feature_cache[i] for i in idxs],
                )
            except ValueError as exc:
                raise EntstdError(f"epoch {epoch}, batch {batch_no}: {exc}") from exc
            if not np.isfinite(loss):
                raise EntstdError(
                    f"epoch {epoch}, batch {batch_no}: non-finite loss {loss!r}; aborting"
                )
            opt.step(grad_w, grad_b)
            params_now = opt.params(init)
            batch_losses.append(loss)
            for key in counts:
                counts[key] += batch_counts[key]
        val_top1 = None
        if val_every > 0 and corpus.test and epoch % val_every == 0:
            val_top1 = _canonical_top1(corpus, params_now, cfg.metric, corpus.test)
        records.append(
            EpochRecord(
                epoch=epoch,
                strategy=strategy,
                mean_loss=float(np.mean(batch_losses)) if batch_losses else 0.0,
                counts=counts,
                val_top1=val_top1,
            )
        )
    return opt.params(init), TrainHistory(records=tuple(records))


def _canonical_top1(
    corpus: Corpus, params: EncoderParams, metric: str, mentions: Sequence[MentionRecord]
) -> float:
    names = [e.canonical_name for e in corpus.entities]
    idx = build_index(encode_batch(params, names), corpus, "canonical", metric)
    report = topk_accuracy(idx, lambda texts: encode_batch(params, texts), mentions, ks=(1,))
    return report.top_k[1]


@dataclass(frozen=True)
class CvReport:
    per_fold: tuple[float, ...]
    mean: float
    std: float
    whole_fold_classes: tuple[str, ...] = ()


def cross_validate(corpus: Corpus, cfg: TrainConfig, k: int, init: EncoderParams) -> CvReport:
    """k-fold cross-validation of held-out top-1 accuracy.

    Folds stratify train mentions by entity; a class with fewer members
    than folds stays whole inside one fold (logged as a warning). Each fold
    model is evaluated against an index of canonical entity names only,
    mirroring inference.
    """
    if k < 2:
        raise ValueError("cross-validation needs k >= 2")
    rng = random.Random(f"entstd-cv:{cfg.seed}")
    members: dict[str, list[int]] = {}
    for i, rec in enumerate(corpus.train):
        members.setdefault(rec.entity_id, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    whole = []
    for eid, idxs in members.items():
        shuffled = idxs[:]
        rng.shuffle(shuffled)
        if len(shuffled) < k:
            target = rng.randrange(k)
            folds[target].extend(shuffled)
            whole.append(eid)
            logger.warning(
                "class %s has %d < %d members; kept whole in fold %d", eid, len(shuffled), k, target
            )
        else:
            for j, idx in enumerate(shuffled):
                folds[j % k].append(idx)
    accs = []
    for f in range(k):
        held = set(folds[f])
        fold_train = tuple(rec for i, rec in enumerate(corpus.train) if i not in held)
        fold_test = [corpus.train[i] for i in sorted(held)]
        sub = Corpus(entities=corpus.entities, train=fold_train, test=())
        params, _ = train(sub, cfg, init)
        accs.append(_canonical_top1(corpus, params, cfg.metric, fold_test) if fold_test else 0.0)
    arr = np.array(accs)
    return CvReport(
        per_fold=tuple(accs),
        mean=float(arr.mean()),
        std=float(arr.std()),
        whole_fold_classes=tuple(whole),
    )


def write_history(history: TrainHistory, path) -> None:
    """Line-delimited history export, one epoch per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in history.records:
            fh.write(
                json.dumps(
                    {
                        "epoch": rec.epoch,
                        "strategy": rec.strategy,
                        "mean_loss": rec.mean_loss,
                        "counts": rec.counts,
                        "val_top1": rec.val_top1,
                    }
                )
                + "\n"
            )


def read_history(path) -> TrainHistory:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            raw = json.loads(line)
            records.append(
                EpochRecord(
                    epoch=raw["epoch"],
                    strategy=raw["strategy"],
                    mean_loss=raw["mean_loss"],
                    counts=raw["counts"],
                    val_top1=raw.get("val_top1"),
                )
            )
    return TrainHistory(records=tuple(records))
