"""Text-to-embedding encoder built on hashed character n-grams.

The trainable backbone is a single linear layer over hashed character
n-gram counts followed by tanh: ``E(x) = tanh(W.T f(x) + c)``. Character
n-grams capture the surface-form similarity that drives entity mention
matching, and the closed-form architecture keeps gradients exact.

The n-gram hash is FNV-1a 64-bit over the UTF-8 bytes of each n-gram,
reduced modulo the bucket count. The FNV offset basis
0xcbf29ce484222325 and prime 0x100000001b3 are fixed so feature indices
are reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import canonicalize

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64_MASK = 0xFFFFFFFFFFFFFFFF

#: Boundary markers padded around the text before n-gram extraction.
BOUNDARY_START = "^"
BOUNDARY_END = "$"

DEFAULT_FEATURE_DIM = 16384
DEFAULT_NGRAM_RANGE = (2, 4)
DEFAULT_OUT_DIM = 128


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _U64_MASK
    return h


@dataclass(frozen=True)
class SparseFeatures:
    """L2-normalized hashed n-gram counts: parallel (bucket index, value) arrays."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense


def ngrams(text: str, ngram_range: tuple[int, int]) -> list[str]:
    """Character n-grams of the padded text for every length in the range."""
    lo, hi = ngram_range
    if lo < 1 or lo > hi:
        raise ValueError(f"invalid ngram_range {ngram_range!r}")
    padded = BOUNDARY_START + text + BOUNDARY_END
    out = []
    for n in range(lo, hi + 1):
        out.extend(padded[i : i + n] for i in range(len(padded) - n + 1))
    return out


def featurize(text: str, feature_dim: int, ngram_range: tuple[int, int]) -> SparseFeatures:
    """Hash the text's character n-grams into ``feature_dim`` buckets.

    The result is the L2-normalized bucket-count vector in sparse form.
    Raises ValueError for text that is empty after canonicalization.
    """
    if feature_dim < 1:
        raise ValueError("feature_dim must be positive")
    clean = canonicalize(text)
    if not clean:
        raise ValueError("cannot featurize empty text")
    counts: dict[int, int] = {}
    for gram in ngrams(clean, ngram_range):
        bucket = fnv1a64(gram.encode("utf-8")) % feature_dim
        counts[bucket] = counts.get(bucket, 0) + 1
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    values /= np.linalg.norm(values)
    return SparseFeatures(indices=indices, values=values, dim=feature_dim)


@dataclass(frozen=True)
class EncoderParams:
    """Parameters of the hashed n-gram encoder.

    ``weights`` is feature_dim x out_dim, ``bias`` is out_dim. Instances are
    immutable; training produces new instances.
    """

    feature_dim: int
    ngram_range: tuple[int, int]
    out_dim: int
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        lo, hi = self.ngram_range
        if lo < 1 or lo > hi:
            raise ValueError(f"invalid ngram_range {self.ngram_range!r}")
        if self.weights.shape != (self.feature_dim, self.out_dim):
            raise ValueError(
                f"weights shape {self.weights.shape} != ({self.feature_dim}, {self.out_dim})"
            )
        if self.bias.shape != (self.out_dim,):
            raise ValueError(f"bias shape {self.bias.shape} != ({self.out_dim},)")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("encoder parameters must be finite")

    def equals(self, other: "EncoderParams") -> bool:
        return (
            self.feature_dim == other.feature_dim
            and tuple(self.ngram_range) == tuple(other.ngram_range)
            and self.out_dim == other.out_dim
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.bias, other.bias)
        )


def init_params(
    feature_dim: int = DEFAULT_FEATURE_DIM,
    ngram_range: tuple[int, int] = DEFAULT_NGRAM_RANGE,
    out_dim: int = DEFAULT_OUT_DIM,
    seed: int = 0,
    weight_scale: float = 0.5,
) -> EncoderParams:
    """Random Gaussian weights (std ``weight_scale``), zero bias."""
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, weight_scale, size=(feature_dim, out_dim))
    return EncoderParams(
        feature_dim=feature_dim,
        ngram_range=(int(ngram_range[0]), int(ngram_range[1])),
        out_dim=out_dim,
        weights=weights,
        bias=np.zeros(out_dim),
    )


def encode_features(params: EncoderParams, feats: SparseFeatures) -> np.ndarray:
    z = feats.values @ params.weights[feats.indices] + params.bias
    return np.tanh(z)


def encode(params: EncoderParams, text: str) -> np.ndarray:
    """Embed one text: tanh(W.T f + c) with f the hashed n-gram features."""
    feats = featurize(text, params.feature_dim, params.ngram_range)
    return encode_features(params, feats)


def encode_batch(params: EncoderParams, texts: list[str]) -> np.ndarray:
    """Embed texts in order; returns a len(texts) x out_dim matrix.

    Any empty text fails with its position, so callers can report the
    offending record.
    """
    for i, text in enumerate(texts):
        if not canonicalize(text):
            raise ValueError(f"empty text at index {i}")
    out = np.empty((len(texts), params.out_dim))
    for i, text in enumerate(texts):
        out[i] = encode(params, text)
    return out
