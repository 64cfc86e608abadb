"""Word embeddings, a convolutional text classifier, and caption metrics.

The pieces compose into one pipeline: build a vocabulary and Huffman tree
from a corpus, train CBOW embeddings against the tree with hierarchical
softmax, feed the embeddings to a small one-dimensional convolutional
classifier, and score generated captions with BLEU and CIDEr.
"""

from .cbow import (
    LossLogEntry,
    TrainerState,
    TrainingConfig,
    load_embeddings,
    log_likelihood,
    nearest_neighbors,
    save_embeddings,
    train,
    word_prob,
)
from .corpus import (
    ContextSample,
    EmptyVocabularyError,
    Vocabulary,
    build_vocabulary,
    extract_contexts,
    read_corpus,
    tokenize,
)
from .huffman import HuffmanTree, build_huffman
from .metrics import (
    CaptionRecord,
    MetricReport,
    bleu,
    cider,
    cider_per_image,
    evaluate,
    load_captions,
    write_report,
)
from .textcnn import (
    LabeledSequence,
    TextCnn,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    train_classifier,
)

__version__ = "0.1.0"

__all__ = [
    "CaptionRecord",
    "ContextSample",
    "EmptyVocabularyError",
    "HuffmanTree",
    "LabeledSequence",
    "LossLogEntry",
    "MetricReport",
    "TextCnn",
    "TrainerState",
    "TrainingConfig",
    "Vocabulary",
    "bleu",
    "build_huffman",
    "build_vocabulary",
    "cider",
    "cider_per_image",
    "evaluate",
    "extract_contexts",
    "load_captions",
    "load_checkpoint",
    "load_dataset",
    "load_embeddings",
    "log_likelihood",
    "nearest_neighbors",
    "read_corpus",
    "save_checkpoint",
    "save_embeddings",
    "tokenize",
    "train",
    "train_classifier",
    "word_prob",
    "write_report",
]
