"""Dataset records, vocabularies, attention ground truth, synthetic data."""

from .attention_gt import attention_gt_from_grid, load_attention_gt
from .records import Dataset, ExampleRecord, load_dataset, load_records, save_records
from .synthetic import (
    COLORS,
    SHAPES,
    SynthConfig,
    SyntheticDataset,
    generate_synthetic,
    validate_example,
    write_dataset,
)
from .vocab import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    AnswerVocabulary,
    Vocabulary,
    build_vocab,
    tokenize,
)

__all__ = [
    "AnswerVocabulary", "BOS_ID", "COLORS", "Dataset", "EOS_ID", "ExampleRecord",
    "PAD_ID", "SHAPES", "SynthConfig", "SyntheticDataset", "UNK_ID", "Vocabulary",
    "attention_gt_from_grid", "build_vocab", "generate_synthetic", "load_attention_gt",
    "load_dataset", "load_records", "save_records", "tokenize", "validate_example",
    "write_dataset",
]
