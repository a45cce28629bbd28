"""Encoder-parameter checkpoints in the shared model container.

The container carries a type tag so TF-IDF models and encoder params can
share one format; loading a file of the wrong type fails with a clear
error instead of misparsing. Weights are stored at full float64 training
precision, so load(save(params)) is bitwise-identical.
"""

from __future__ import annotations

from .binio import MAGIC_MODEL, Reader, Writer, read_container, write_container
from .encoder import EncoderParams
from .errors import DataError

TAG_ENCODER_PARAMS = "encoder-params"


def save_checkpoint(params: EncoderParams, path) -> None:
    w = Writer()
    w.string(TAG_ENCODER_PARAMS)
    w.u32(params.feature_dim)
    w.u32(params.ngram_range[0])
    w.u32(params.ngram_range[1])
    w.u32(params.out_dim)
    w.float_array(params.weights.astype("<f8", copy=False))
    w.float_array(params.bias.astype("<f8", copy=False))
    write_container(path, MAGIC_MODEL, w.payload())


def load_checkpoint(path) -> EncoderParams:
    r = Reader(read_container(path, MAGIC_MODEL))
    tag = r.string()
    if tag != TAG_ENCODER_PARAMS:
        raise DataError(f"model file holds {tag!r}, not {TAG_ENCODER_PARAMS!r}")
    feature_dim = r.u32()
    lo = r.u32()
    hi = r.u32()
    out_dim = r.u32()
    weights = r.float_array().reshape(feature_dim, out_dim)
    bias = r.float_array()
    if not r.done():
        raise DataError("corrupted file: checkpoint payload has trailing bytes")
    return EncoderParams(
        feature_dim=feature_dim,
        ngram_range=(lo, hi),
        out_dim=out_dim,
        weights=weights,
        bias=bias,
    )
