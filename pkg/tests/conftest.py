"""Shared fixtures: small corpora and encoder params sized for fast tests."""

from __future__ import annotations

import numpy as np
import pytest

from entstd.corpus import Corpus, Entity, MentionRecord, SynthesisConfig, synthesize_corpus
from entstd.encoder import EncoderParams, init_params


@pytest.fixture(scope="session")
def synth_corpus() -> Corpus:
    """The seed-pinned desk-scale corpus used across integration tests."""
    return synthesize_corpus(SynthesisConfig(n_entities=30, mentions_per_entity=10, seed=2))


@pytest.fixture(scope="session")
def tiny_corpus() -> Corpus:
    return synthesize_corpus(SynthesisConfig(n_entities=8, mentions_per_entity=6, seed=5))


@pytest.fixture
def toy_corpus() -> Corpus:
    """Hand-built two-entity corpus for precise assertions."""
    return Corpus(
        entities=(
            Entity(id="a", canonical_name="Alpha Server", kb_mentions=("alpha srv",)),
            Entity(id="b", canonical_name="Beta Engine"),
        ),
        train=(
            MentionRecord("ALPHA SERVER", "a"),
            MentionRecord("alpha server v2", "a"),
            MentionRecord("BETA ENGINE", "b"),
            MentionRecord("beta engine v2", "b"),
        ),
        test=(
            MentionRecord("Alpha Servre", "a"),
            MentionRecord("Beta Enginee", "b"),
        ),
    )


@pytest.fixture
def small_params() -> EncoderParams:
    return init_params(feature_dim=256, ngram_range=(2, 3), out_dim=8, seed=11)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
