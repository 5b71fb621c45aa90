"""Lexical semantic change detection between two corpora.

Train one skip-gram space per corpus, map the spaces into a common
space (CCA, orthogonal Procrustes or unsupervised self-learning), and
score each target word by the cosine between its two aligned vectors.
"""

__version__ = "0.1.0"

from .align import (
    AlignedPair,
    Direction,
    LinearMap,
    Method,
    SeedDictionary,
    align_pair,
    apply,
    build_seed_dictionary,
    fit_cca,
    fit_orthogonal,
    fit_unsupervised,
)
from .corpus import Corpus, TargetSet, Vocabulary, build_vocabulary, load_corpus, load_targets
from .evaluation import accuracy, optimal_threshold, spearman
from .lsc import (
    ChangeScore,
    rank_targets,
    score_targets,
    threshold_binary,
    threshold_global,
    threshold_nearest_neighbors,
)
from .sgns import SgnsConfig, train
from .space import EmbeddingSpace, load_space, save_space

__all__ = [
    "AlignedPair", "ChangeScore", "Corpus", "Direction", "EmbeddingSpace", "LinearMap", "Method",
    "SeedDictionary", "SgnsConfig", "TargetSet", "Vocabulary", "accuracy", "align_pair", "apply",
    "build_seed_dictionary", "build_vocabulary", "fit_cca", "fit_orthogonal", "fit_unsupervised",
    "load_corpus", "load_space", "load_targets", "optimal_threshold", "rank_targets", "save_space",
    "score_targets", "spearman", "threshold_binary", "threshold_global", "threshold_nearest_neighbors",
    "train",
]
