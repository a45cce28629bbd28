"""TF-IDF nearest-neighbor baseline sharing the index/eval machinery.

Terms are the union of word unigrams and character n-grams (default 2-4)
over the canonicalized surface; the two families are namespaced ("w:" /
"c:") so a short word and an identical character gram stay distinct
vocabulary entries. Character grams are taken over the raw surface
including spaces, with no boundary padding. Case is preserved, matching
the rest of the toolkit.

idf(t) = ln((1 + N) / (1 + df(t))) + 1 with one document per surface.
Encoded vectors are tf * idf, L2-normalized; a text with no known terms
encodes to the zero vector, which the retrieval path treats as maximal
distance under cosine.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import log
from typing import Sequence

import numpy as np

from .binio import MAGIC_MODEL, Reader, Writer, read_container, write_container
from .corpus import canonicalize
from .errors import DataError

TAG_TFIDF_MODEL = "tfidf-model"


@dataclass(frozen=True)
class TfidfConfig:
    ngram_range: tuple[int, int] = (2, 4)
    use_words: bool = True

    def __post_init__(self):
        lo, hi = self.ngram_range
        if lo < 1 or lo > hi:
            raise ValueError(f"invalid ngram_range {self.ngram_range!r}")


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]  # term -> column
    idf: np.ndarray  # per-column weights, all finite and >= 0
    config: TfidfConfig

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def equals(self, other: "TfidfModel") -> bool:
        return (
            self.vocabulary == other.vocabulary
            and self.config == other.config
            and np.array_equal(self.idf, other.idf)
        )


def extract_terms(text: str, config: TfidfConfig) -> list[str]:
    clean = canonicalize(text)
    terms = []
    if config.use_words:
        terms.extend("w:" + tok for tok in clean.split(" ") if tok)
    lo, hi = config.ngram_range
    for n in range(lo, hi + 1):
        terms.extend("c:" + clean[i : i + n] for i in range(len(clean) - n + 1))
    return terms


def fit_tfidf(documents: Sequence[str], config: TfidfConfig = TfidfConfig()) -> TfidfModel:
    """Fit vocabulary and idf weights, one document per surface.

    The vocabulary is sorted, so refitting identical input reproduces an
    identical model.
    """
    if not documents:
        raise DataError("cannot fit TF-IDF on an empty corpus")
    df: Counter = Counter()
    for doc in documents:
        df.update(set(extract_terms(doc, config)))
    vocabulary = {term: col for col, term in enumerate(sorted(df))}
    n = len(documents)
    idf = np.empty(len(vocabulary))
    for term, col in vocabulary.items():
        idf[col] = log((1 + n) / (1 + df[term])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, config=config)


def tfidf_encode(model: TfidfModel, text: str) -> np.ndarray:
    """tf * idf of the text, L2-normalized; all-OOV text gives the zero vector."""
    vec = np.zeros(model.dim)
    for term, count in Counter(extract_terms(text, model.config)).items():
        col = model.vocabulary.get(term)
        if col is not None:
            vec[col] = count * model.idf[col]
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def tfidf_encode_batch(model: TfidfModel, texts: Sequence[str]) -> np.ndarray:
    out = np.zeros((len(texts), model.dim))
    for i, text in enumerate(texts):
        out[i] = tfidf_encode(model, text)
    return out


def save_tfidf(model: TfidfModel, path) -> None:
    w = Writer()
    w.string(TAG_TFIDF_MODEL)
    w.u32(model.config.ngram_range[0])
    w.u32(model.config.ngram_range[1])
    w.u8(1 if model.config.use_words else 0)
    terms = sorted(model.vocabulary, key=model.vocabulary.get)
    w.u64(len(terms))
    for term in terms:
        w.string(term)
    w.float_array(model.idf.astype("<f8", copy=False))
    write_container(path, MAGIC_MODEL, w.payload())


def load_tfidf(path) -> TfidfModel:
    r = Reader(read_container(path, MAGIC_MODEL))
    tag = r.string()
    if tag != TAG_TFIDF_MODEL:
        raise DataError(f"model file holds {tag!r}, not {TAG_TFIDF_MODEL!r}")
    lo = r.u32()
    hi = r.u32()
    use_words = bool(r.u8())
    n_terms = r.u64()
    vocabulary = {r.string(): col for col in range(n_terms)}
    idf = r.float_array()
    if not r.done() or idf.size != n_terms:
        raise DataError("corrupted file: tfidf payload inconsistent")
    return TfidfModel(
        vocabulary=vocabulary,
        idf=idf,
        config=TfidfConfig(ngram_range=(lo, hi), use_words=use_words),
    )
