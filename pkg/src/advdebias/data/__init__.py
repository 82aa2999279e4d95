"""Dataset construction: toy generator, UCI Adult, word embeddings."""

from .adult import AdultCodec, age_bucket, encode_features, load_adult
from .embeddings import (
    DEFAULT_PAIRS, AnalogyItem, BiasSubspace, EmbeddingTable, MissingWordError, analogy_examples,
    complete_analogy, compute_bias_subspace, load_analogies, load_embeddings, load_pairs,
    project_protected,
)
from .examples import ExampleSet, LabeledExample
from .synthetic import planted_gender_vocabulary
from .toy import ToyConfig, generate_toy

__all__ = [
    "AdultCodec", "age_bucket", "encode_features", "load_adult",
    "DEFAULT_PAIRS", "AnalogyItem", "BiasSubspace", "EmbeddingTable", "MissingWordError",
    "analogy_examples", "complete_analogy", "compute_bias_subspace", "load_analogies",
    "load_embeddings", "load_pairs", "project_protected",
    "ExampleSet", "LabeledExample", "planted_gender_vocabulary", "ToyConfig", "generate_toy",
]
