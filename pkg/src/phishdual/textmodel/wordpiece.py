"""WordPiece vocabulary building and greedy longest-match tokenization."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PAD, UNK, CLS, SEP = "[PAD]", "[UNK]", "[CLS]", "[SEP]"
SPECIALS = (PAD, UNK, CLS, SEP)
CONTINUATION = "##"
MAX_CHARS_PER_WORD = 100
DEFAULT_MAX_LEN = 256


def _is_punctuation(ch):
    cp = ord(ch)
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def pre_tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace and isolate each punctuation character."""
    words = []
    for chunk in text.lower().split():
        current = []
        for ch in chunk:
            if _is_punctuation(ch):
                if current:
                    words.append("".join(current))
                    current = []
                words.append(ch)
            elif unicodedata.category(ch) in ("Cc", "Cf"):
                continue
            else:
                current.append(ch)
        if current:
            words.append("".join(current))
    return words


@dataclass(frozen=True)
class WordPieceVocab:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("vocabulary tokens must be unique")
        missing = [s for s in SPECIALS if s not in self.tokens]
        if missing:
            raise ValueError(f"vocabulary is missing special tokens {missing}")
        object.__setattr__(self, "token_to_id", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_id

    @property
    def pad_id(self):
        return self.token_to_id[PAD]

    @property
    def unk_id(self):
        return self.token_to_id[UNK]

    @property
    def cls_id(self):
        return self.token_to_id[CLS]

    @property
    def sep_id(self):
        return self.token_to_id[SEP]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "WordPieceVocab":
        with open(path, encoding="utf-8") as fh:
            return cls(tuple(line.rstrip("\n") for line in fh if line.rstrip("\n")))


def build_vocab(corpus: Sequence[str], target_size: int) -> WordPieceVocab:
    """Specials, then whole words, then ``##`` suffix fragments, up to ``target_size``.

    Words and fragments are each ranked by descending frequency with ties broken
    lexicographically.  A fragment's frequency is the summed frequency of the
    words it ends.
    """
    if len(corpus) == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if target_size <= len(SPECIALS):
        raise ValueError(f"target_size must exceed {len(SPECIALS)}")

    words = Counter()
    for text in corpus:
        words.update(pre_tokenize(text))
    tokens = list(SPECIALS)
    seen = set(tokens)

    def take(ranked):
        for tok, _ in ranked:
            if len(tokens) >= target_size:
                return
            if tok not in seen:
                tokens.append(tok)
                seen.add(tok)

    take(sorted(words.items(), key=lambda kv: (-kv[1], kv[0])))
    fragments = Counter()
    for word, freq in words.items():
        for i in range(1, len(word)):
            fragments[CONTINUATION + word[i:]] += freq
    take(sorted(fragments.items(), key=lambda kv: (-kv[1], kv[0])))
    return WordPieceVocab(tuple(tokens))


def wordpiece(vocab: WordPieceVocab, word: str) -> list[str]:
    """Greedy longest-match-first split of one pre-tokenized word."""
    if len(word) > MAX_CHARS_PER_WORD:
        return [UNK]
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION + piece
            if piece in vocab.token_to_id:
                match = piece
                break
            end -= 1
        if match is None:
            return [UNK]
        pieces.append(match)
        start = end
    return pieces


def tokenize_to_tokens(vocab: WordPieceVocab, text: str) -> list[str]:
    out = []
    for word in pre_tokenize(text):
        out.extend(wordpiece(vocab, word))
    return out


@dataclass(frozen=True)
class TokenizedInput:
    input_ids: np.ndarray
    attention_mask: np.ndarray
    label: int | None = None

    @property
    def length(self) -> int:
        return int(self.attention_mask.sum())


def tokenize(vocab: WordPieceVocab, text: str, max_len: int = DEFAULT_MAX_LEN, label=None) -> TokenizedInput:
    """``[CLS] pieces [SEP]`` padded with ``[PAD]`` to exactly ``max_len``.

    Long inputs keep their head; ``[CLS]`` and the closing ``[SEP]`` always survive.
    """
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    pieces = tokenize_to_tokens(vocab, text)[: max_len - 2]
    ids = [vocab.cls_id] + [vocab.token_to_id[p] for p in pieces] + [vocab.sep_id]
    n = len(ids)
    input_ids = np.full(max_len, vocab.pad_id, dtype=np.int64)
    input_ids[:n] = ids
    mask = np.zeros(max_len, dtype=np.int64)
    mask[:n] = 1
    return TokenizedInput(input_ids, mask, None if label is None else int(label))


def convert_ids_to_tokens(vocab: WordPieceVocab, ids: Iterable[int]) -> list[str]:
    return [vocab.tokens[int(i)] for i in ids]


def detokenize(vocab: WordPieceVocab, ids: Iterable[int]) -> list[str]:
    """Words recovered from ids: specials dropped, ``##`` pieces glued back on."""
    words = []
    for tok in convert_ids_to_tokens(vocab, ids):
        if tok in SPECIALS:
            continue
        if tok.startswith(CONTINUATION) and words:
            words[-1] += tok[len(CONTINUATION):]
        else:
            words.append(tok)
    return words


def stack_batch(items: Sequence[TokenizedInput]):
    """Stack inputs into ``(ids, mask, labels)`` arrays; labels is None if any is missing."""
    ids = np.stack([it.input_ids for it in items])
    mask = np.stack([it.attention_mask for it in items])
    if any(it.label is None for it in items):
        labels = None
    else:
        labels = np.array([it.label for it in items], dtype=np.int64)
    return ids, mask, labels
