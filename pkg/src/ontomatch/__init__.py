"""Ontology alignment toolkit.

Aligns semantically equivalent entities across two ontologies using idf
candidate blocking, engineered string features, a logistic-regression
baseline, and a siamese neural pair scorer.
"""

from .blocking import CandidateIndex, tokenize
from .embeddings import EmbeddingTable, train_skipgram
from .features import FEATURE_NAMES, PairFeaturizer, compute_features
from .kb import (
    Alignment,
    Entity,
    Ontology,
    ReferenceAlignment,
    load_kb,
    parse_kb_file,
    save_kb,
    write_alignment,
)
from .lr import LogisticRegressionMatcher
from .pipeline import AlignConfig, Metrics, align, evaluate, exact_match_prepass
from .scorer import NeuralMatcher

__all__ = [
    "AlignConfig",
    "Alignment",
    "CandidateIndex",
    "EmbeddingTable",
    "Entity",
    "FEATURE_NAMES",
    "LogisticRegressionMatcher",
    "Metrics",
    "NeuralMatcher",
    "Ontology",
    "PairFeaturizer",
    "ReferenceAlignment",
    "align",
    "compute_features",
    "evaluate",
    "exact_match_prepass",
    "load_kb",
    "parse_kb_file",
    "save_kb",
    "tokenize",
    "train_skipgram",
    "write_alignment",
]
