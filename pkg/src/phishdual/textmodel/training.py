"""Training loop with best-validation-loss checkpointing, plus text inference."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .._seeding import make_rng
from ..errors import DataError
from . import encoder as enc
from .wordpiece import DEFAULT_MAX_LEN, WordPieceVocab, stack_batch, tokenize

log = logging.getLogger(__name__)

FINE_TUNE_LR = 2e-5
FROM_SCRATCH_LR = 1e-3


@dataclass(frozen=True)
class TextTrainConfig:
    epochs: int = 3
    learning_rate: float = FROM_SCRATCH_LR
    batch_size: int = 8
    seed: int = 0
    validation_fraction: float = 0.1
    optimizer: str = "momentum"  # or "sgd"
    momentum: float = 0.9
    max_len: int = DEFAULT_MAX_LEN
    num_layers: int = 2
    num_heads: int = 2
    d_model: int = 32
    d_ff: int = 64
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")
        if self.optimizer not in ("sgd", "momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def encoder_config(self, vocab_size: int) -> enc.EncoderConfig:
        return enc.EncoderConfig(
            vocab_size=vocab_size, num_layers=self.num_layers, num_heads=self.num_heads,
            d_model=self.d_model, d_ff=self.d_ff, max_len=self.max_len,
            dropout_rate=self.dropout_rate,
        )


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float


@dataclass
class TextModel:
    vocab: WordPieceVocab
    config: enc.EncoderConfig
    params: dict
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0

    def encode(self, texts: Sequence[str], labels=None):
        items = [tokenize(self.vocab, t, self.config.max_len) for t in texts]
        ids, mask, _ = stack_batch(items)
        return ids, mask

    def predict_proba(self, texts: Sequence[str], batch_size: int = 32) -> np.ndarray:
        out = []
        for start in range(0, len(texts), batch_size):
            ids, mask = self.encode(texts[start:start + batch_size])
            out.append(enc.predict_proba(self.params, self.config, ids, mask))
        return np.concatenate(out) if out else np.empty(0)

    def save(self, directory):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.vocab.save(directory / "vocab.txt")
        enc.save_params(directory / "params.json", self.params, self.config)

    @classmethod
    def load(cls, directory) -> "TextModel":
        directory = Path(directory)
        vocab = WordPieceVocab.load(directory / "vocab.txt")
        params, config = enc.load_params(directory / "params.json")
        if config.vocab_size != len(vocab):
            raise DataError(f"params expect {config.vocab_size} tokens, vocab has {len(vocab)}")
        return cls(vocab, config, params)


def predict_text(params, config: enc.EncoderConfig, vocab: WordPieceVocab, text: str) -> float:
    """Phishing probability of one text: tokenize, encode, softmax."""
    item = tokenize(vocab, text, config.max_len)
    return float(enc.predict_proba(params, config, item.input_ids, item.attention_mask)[0])


def _evaluate(params, config, ids, mask, labels, batch_size=64):
    total = 0.0
    correct = 0
    for start in range(0, len(labels), batch_size):
        sl = slice(start, start + batch_size)
        logits, _ = enc.forward(params, config, ids[sl], mask[sl])
        loss, _ = enc.cross_entropy(logits, labels[sl])
        total += loss * logits.shape[0]
        correct += int(np.sum(np.argmax(logits, axis=1) == labels[sl]))
    n = len(labels)
    return total / n, correct / n


def validation_split(n: int, fraction: float, seed: int):
    """Seeded (train, validation) index arrays; validation gets ``ceil(fraction * n)``, at least 1."""
    n_val = min(n - 1, max(1, math.ceil(fraction * n - 1e-9)))
    perm = make_rng(seed, 1).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train_text(texts: Sequence[str], labels: Sequence[int], vocab: WordPieceVocab,
               config: TextTrainConfig = TextTrainConfig(), init=None) -> TextModel:
    """Train the encoder from a seeded init and return the best-validation-loss epoch.

    The pre-training parameters count as epoch 0, so a run that never improves
    validation loss returns its initialisation.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(texts) != len(labels):
        raise DataError(f"{len(texts)} texts but {len(labels)} labels")
    if np.unique(labels).size < 2:
        raise DataError("training data must contain both classes")
    if len(texts) < 2:
        raise DataError("need at least 2 examples")

    ecfg = config.encoder_config(len(vocab))
    params = init if init is not None else enc.init_params(ecfg, config.seed)
    params = {k: v.copy() for k, v in params.items()}
    enc.check_params(params, ecfg)

    items = [tokenize(vocab, t, ecfg.max_len, label=y) for t, y in zip(texts, labels)]
    ids, mask, y = stack_batch(items)
    tr, va = validation_split(len(items), config.validation_fraction, config.seed)
    ids_tr, mask_tr, y_tr = ids[tr], mask[tr], y[tr]
    ids_va, mask_va, y_va = ids[va], mask[va], y[va]

    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    rng = make_rng(config.seed, 2)
    lr = config.learning_rate
    beta = config.momentum if config.optimizer == "momentum" else 0.0

    best_val, _ = _evaluate(params, ecfg, ids_va, mask_va, y_va)
    best = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    tr_loss, tr_acc = _evaluate(params, ecfg, ids_tr, mask_tr, y_tr)
    history = [EpochStats(0, tr_loss, tr_acc, best_val)]

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(y_tr))
        for start in range(0, len(order), config.batch_size):
            b = order[start:start + config.batch_size]
            _, grads = enc.loss_and_grads(params, ecfg, ids_tr[b], mask_tr[b], y_tr[b], train=True, rng=rng)
            for name, g in grads.items():
                v = velocity[name]
                v *= beta
                v -= lr * g
                params[name] += v
        val_loss, _ = _evaluate(params, ecfg, ids_va, mask_va, y_va)
        tr_loss, tr_acc = _evaluate(params, ecfg, ids_tr, mask_tr, y_tr)
        history.append(EpochStats(epoch, tr_loss, tr_acc, val_loss))
        log.debug("epoch %d train_loss=%.4f train_acc=%.3f val_loss=%.4f", epoch, tr_loss, tr_acc, val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch

    return TextModel(vocab, ecfg, best, history, best_epoch)


def history_to_json(history: Sequence[EpochStats]) -> str:
    return json.dumps([asdict(h) for h in history])
