"""Small transformer text classifier: WordPiece tokenizer, encoder and training loop."""

from .encoder import EncoderConfig, forward, init_params, load_params, loss_and_grads, save_params
from .training import (
    FINE_TUNE_LR,
    FROM_SCRATCH_LR,
    EpochStats,
    TextModel,
    TextTrainConfig,
    predict_text,
    train_text,
)
from .wordpiece import (
    TokenizedInput,
    WordPieceVocab,
    build_vocab,
    convert_ids_to_tokens,
    detokenize,
    pre_tokenize,
    tokenize,
)

__all__ = [
    "EncoderConfig", "forward", "init_params", "load_params", "loss_and_grads", "save_params",
    "FINE_TUNE_LR", "FROM_SCRATCH_LR", "EpochStats", "TextModel", "TextTrainConfig",
    "predict_text", "train_text", "TokenizedInput", "WordPieceVocab", "build_vocab",
    "convert_ids_to_tokens", "detokenize", "pre_tokenize", "tokenize",
]
