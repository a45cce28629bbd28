"""Entity standardization toolkit.

Trains a text-embedding encoder with contrastive triplet losses and online
triplet mining, then standardizes noisy mentions by nearest-neighbor
retrieval against a precomputed index of knowledge-base entities.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import (
    Corpus,
    Entity,
    MentionRecord,
    SynthesisConfig,
    canonicalize,
    load_corpus,
    save_corpus,
    synthesize_corpus,
    validate_corpus,
)
from .encoder import EncoderParams, encode, encode_batch, featurize, init_params
from .errors import CorpusValidationError, DataError, EntstdError, ProviderError
from .evaluation import (
    EvalReport,
    RocReport,
    benchmark_inference,
    roc_curve,
    roc_from_scores,
    topk_accuracy,
)
from .gradients import loss_and_gradients
from .index import EmbeddingIndex, build_index, indexed_surfaces, load_index, query, save_index
from .metrics import distance, pairwise_distances
from .mining import (
    BatchPlan,
    MiningStrategy,
    Triplet,
    batch_all_loss,
    batch_hard_loss,
    classify_triplet,
    enumerate_valid_triplets,
    sample_batches,
    triplet_loss,
)
from .provider import EmbeddingCache, ProviderConfig, fetch_embeddings
from .tfidf import TfidfConfig, TfidfModel, fit_tfidf, load_tfidf, save_tfidf, tfidf_encode
from .trainer import CvReport, TrainConfig, TrainHistory, cross_validate, train

__version__ = "0.1.0"
