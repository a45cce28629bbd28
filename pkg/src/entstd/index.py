"""Precomputed entity-embedding index: build, persist, query.

Entity embeddings are computed once, stored as little-endian float32 rows,
and queried by exact brute-force scan, so inference over q mentions costs
q encoder calls plus q scans — the encoder never runs pairwise. In
"canonical" mode the index holds one row per entity (its canonical name);
"extended" mode adds one row per train mention, and a query scores each
entity by its closest row.

Results sort ascending by distance with ties broken by row order, so
top-k lists are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .binio import MAGIC_INDEX, Reader, Writer, digest64, read_container, write_container
from .corpus import Corpus
from .errors import DataError
from .metrics import check_metric, distances_to

INDEX_MODES = ("canonical", "extended")


def indexed_surfaces(corpus: Corpus, mode: str) -> list[tuple[str, str]]:
    """(entity_id, surface) pairs to embed, in index row order."""
    if mode not in INDEX_MODES:
        raise ValueError(f"unknown index mode {mode!r}; expected one of {INDEX_MODES}")
    rows = [(e.id, e.canonical_name) for e in corpus.entities]
    if mode == "extended":
        rows.extend((r.entity_id, r.surface) for r in corpus.train)
    return rows


@dataclass(frozen=True)
class EmbeddingIndex:
    """Row-per-surface matrix of entity embeddings with id mapping."""

    entity_ids: tuple[str, ...]
    vectors: np.ndarray  # float32, len(entity_ids) x dim
    metric: str
    mode: str
    digest: int

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @cached_property
    def _vectors64(self) -> np.ndarray:
        # Scans run in float64; cast once per index instead of per query.
        return self.vectors.astype(np.float64)

    @property
    def n_rows(self) -> int:
        return int(self.vectors.shape[0])

    def distinct_entities(self) -> int:
        return len(set(self.entity_ids))

    def equals(self, other: "EmbeddingIndex") -> bool:
        return (
            self.entity_ids == other.entity_ids
            and self.metric == other.metric
            and self.mode == other.mode
            and self.digest == other.digest
            and np.array_equal(self.vectors, other.vectors)
        )


def _payload(entity_ids, vectors: np.ndarray, metric: str, mode: str) -> bytes:
    w = Writer()
    w.string(metric)
    w.string(mode)
    w.u32(vectors.shape[1])
    w.u64(vectors.shape[0])
    for eid in entity_ids:
        w.string(eid)
    w.float_array(vectors)
    return w.payload()


def build_index(vectors: np.ndarray, corpus: Corpus, mode: str, metric: str) -> EmbeddingIndex:
    """Assemble an index from precomputed embeddings.

    ``vectors`` must hold one row per surface of ``indexed_surfaces(corpus,
    mode)``, in that order. Rows are stored as float32; the content digest
    covers ids, rows, metric, and mode.
    """
    check_metric(metric)
    if not corpus.entities:
        raise DataError("cannot build an index over an empty entity set")
    surfaces = indexed_surfaces(corpus, mode)
    arr = np.asarray(vectors, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[0] != len(surfaces):
        raise DataError(
            f"expected {len(surfaces)} embedding rows for mode {mode!r}, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise DataError("index rows must be finite")
    ids = tuple(eid for eid, _ in surfaces)
    return EmbeddingIndex(
        entity_ids=ids,
        vectors=arr,
        metric=metric,
        mode=mode,
        digest=digest64(_payload(ids, arr, metric, mode)),
    )


def save_index(index: EmbeddingIndex, path) -> None:
    write_container(path, MAGIC_INDEX, _payload(index.entity_ids, index.vectors, index.metric, index.mode))


def load_index(path) -> EmbeddingIndex:
    """Load an index, verifying the content digest before returning anything."""
    payload = read_container(path, MAGIC_INDEX)
    r = Reader(payload)
    metric = r.string()
    mode = r.string()
    dim = r.u32()
    n = r.u64()
    ids = tuple(r.string() for _ in range(n))
    flat = r.float_array()
    if not r.done() or flat.size != n * dim:
        raise DataError("corrupted file: index payload has trailing or missing bytes")
    vectors = flat.reshape(n, dim)
    return EmbeddingIndex(
        entity_ids=ids,
        vectors=vectors,
        metric=metric,
        mode=mode,
        digest=digest64(payload),
    )


def query(
    index: EmbeddingIndex,
    q: np.ndarray,
    k: int,
    zero_query: str = "error",
) -> list[tuple[str, float]]:
    """k nearest entities to the query embedding, exact brute-force.

    In extended mode an entity scores the minimum distance over its rows
    and appears at most once. Returns min(k, distinct entities) pairs
    sorted ascending by (distance, row order).
    """
    if k < 1:
        raise ValueError("k must be a positive count")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ValueError(f"dimension mismatch: query {q.shape} vs index dim {index.dim}")
    dists = distances_to(index.metric, q, index._vectors64, zero_query=zero_query)
    best: dict[str, tuple[float, int]] = {}
    for row, (eid, d) in enumerate(zip(index.entity_ids, dists)):
        d = float(d)
        if eid not in best or d < best[eid][0]:
            best[eid] = (d, row)
    ranked = sorted(best.items(), key=lambda item: (item[1][0], item[1][1]))
    return [(eid, d) for eid, (d, _) in ranked[:k]]
