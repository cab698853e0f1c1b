"""vocalign: desk-scale vocabulary alignment — synonymy prediction over
terminology atoms via a twin-tower similarity model and zero-shot
cross-encoder baselines."""

__version__ = "0.1.0"

from .atoms import Atom, AtomStore, ValidationReport, concept_members, ingest, validate, write_atoms
from .embeddings import (
    ArithmeticMockEncoder,
    EmbeddingTable,
    ExtractionStrategy,
    all_strategies,
    extract_contextual_table,
    load_static_table,
    lookup,
    random_table,
    write_table,
)
from .errors import (
    AtomFileError,
    ConfigError,
    EncoderError,
    PairFileError,
    TrainingError,
    VectorFileError,
    VocalignError,
)
from .lexsim import build_index, jaccard, top_n_similar_negatives, word_tokenize, word_tokens
from .metrics import ConfusionMatrix, MetricsRow, confusion, metrics, render, threshold_sweep
from .pairs import (
    DatasetSpec,
    LabeledPair,
    PairGenResult,
    generate_negatives,
    generate_positives,
    read_pairs,
    split_train_test,
    write_pairs,
)
from .siamese import SiameseConfig, SiameseModel, TrainReport, build, predict, similarity, train
from .crossenc import (
    LexicalOverlapClassifier,
    evaluate_ordered,
    format_pair,
    predict_pair,
    write_score_dump,
)
from .synthetic import generate_corpus

__all__ = [
    "__version__",
    # atoms
    "Atom", "AtomStore", "ValidationReport", "ingest", "validate", "write_atoms", "concept_members",
    # lexsim
    "word_tokens", "word_tokenize", "jaccard", "build_index", "top_n_similar_negatives",
    # pairs
    "LabeledPair", "DatasetSpec", "PairGenResult", "generate_positives", "generate_negatives",
    "split_train_test", "write_pairs", "read_pairs",
    # embeddings
    "EmbeddingTable", "ExtractionStrategy", "all_strategies", "ArithmeticMockEncoder",
    "load_static_table", "write_table", "random_table", "extract_contextual_table", "lookup",
    # siamese
    "SiameseConfig", "SiameseModel", "TrainReport", "build", "similarity", "train", "predict",
    # crossencoder
    "LexicalOverlapClassifier", "format_pair", "predict_pair", "evaluate_ordered",
    "write_score_dump",
    # metrics
    "ConfusionMatrix", "MetricsRow", "confusion", "metrics", "threshold_sweep", "render",
    # synthetic
    "generate_corpus",
    # errors
    "VocalignError", "AtomFileError", "PairFileError", "VectorFileError", "ConfigError",
    "TrainingError", "EncoderError",
]
