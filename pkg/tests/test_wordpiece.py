import numpy as np
import pytest

from phishdual.textmodel import wordpiece as wp
from phishdual.textmodel.wordpiece import SPECIALS, WordPieceVocab

REFERENCE_SENTENCE = "Please verify your account to avoid suspension."
REFERENCE_TOKENS = ["[CLS]", "please", "verify", "your", "account", "to", "avoid", "suspension", ".", "[SEP]"]

FIVE_SENTENCES = [
    "The bank account is locked.",
    "Verify the account now.",
    "The meeting is at noon.",
    "Your bank called.",
    "Verify now!",
]
# Word counts worked out by hand, in frequency-then-lexicographic order.
FIVE_SENTENCE_WORDS = [
    ".",  # 4
    "the",  # 3
    "account", "bank", "is", "now", "verify",  # 2 each
    "!", "at", "called", "locked", "meeting", "noon", "your",  # 1 each
]
# Suffix fragments with summed frequency 3: "##e" and "##he" (the x3), "##t" (account x2, at x1).
FIVE_SENTENCE_TOP_FRAGMENTS = ["##e", "##he", "##t"]

# Ten-token fixture vocabulary and hand-traced greedy longest-match splits.
FIXTURE_VOCAB = WordPieceVocab(SPECIALS + ("un", "##known", "##k", "play", "##ing", "##s",
                                           "verify", "account", "a", "##cc"))
GREEDY_TABLE = [
    ("unknown", ["un", "##known"]),
    ("unk", ["un", "##k"]),
    ("playing", ["play", "##ing"]),
    ("plays", ["play", "##s"]),
    ("play", ["play"]),
    ("acc", ["a", "##cc"]),
    ("verify", ["verify"]),
    ("unknownzzz", ["[UNK]"]),
    ("ing", ["[UNK]"]),
    ("playx", ["[UNK]"]),
]


def _reference_vocab():
    return wp.build_vocab([REFERENCE_SENTENCE], 100)


def test_reference_tokenization_example():
    vocab = _reference_vocab()
    item = wp.tokenize(vocab, REFERENCE_SENTENCE)
    n = item.length
    assert wp.convert_ids_to_tokens(vocab, item.input_ids[:n]) == REFERENCE_TOKENS
    assert item.input_ids.shape == (256,)
    assert np.all(item.input_ids[n:] == vocab.pad_id)


def test_tiny_vocab_frequency_order():
    vocab = wp.build_vocab(["a a a b"], 6)
    assert vocab.tokens == SPECIALS + ("a", "b")


@pytest.mark.parametrize("target", [5, 6, 12, 30])
def test_specials_always_present_once(target):
    vocab = wp.build_vocab(FIVE_SENTENCES, target)
    assert vocab.tokens[:4] == SPECIALS
    assert sum(t in SPECIALS for t in vocab.tokens) == 4
    assert len(vocab) <= target


def test_five_sentence_vocab_matches_hand_table():
    words_only = wp.build_vocab(FIVE_SENTENCES, 4 + len(FIVE_SENTENCE_WORDS))
    assert list(words_only.tokens[4:]) == FIVE_SENTENCE_WORDS
    with_fragments = wp.build_vocab(FIVE_SENTENCES, 4 + len(FIVE_SENTENCE_WORDS) + 3)
    assert list(with_fragments.tokens[4 + len(FIVE_SENTENCE_WORDS):]) == FIVE_SENTENCE_TOP_FRAGMENTS
    truncated = wp.build_vocab(FIVE_SENTENCES, 12)
    assert list(truncated.tokens[4:]) == FIVE_SENTENCE_WORDS[:8]


def test_vocab_errors():
    with pytest.raises(ValueError):
        wp.build_vocab([], 10)
    with pytest.raises(ValueError):
        wp.build_vocab(["x"], 4)
    with pytest.raises(ValueError):
        WordPieceVocab(("[PAD]", "[UNK]", "[CLS]"))


@pytest.mark.parametrize("word,pieces", GREEDY_TABLE)
def test_greedy_longest_match_table(word, pieces):
    assert wp.wordpiece(FIXTURE_VOCAB, word) == pieces


def test_pre_tokenize_isolates_punctuation():
    assert wp.pre_tokenize("Hello, World!! x.y") == ["hello", ",", "world", "!", "!", "x", ".", "y"]


def test_empty_string():
    vocab = _reference_vocab()
    item = wp.tokenize(vocab, "", max_len=8)
    assert item.attention_mask.tolist() == [1, 1, 0, 0, 0, 0, 0, 0]
    assert item.input_ids[:2].tolist() == [vocab.cls_id, vocab.sep_id]


@pytest.mark.parametrize("max_len", [2, 3, 5, 10, 11, 256])
def test_truncation_keeps_cls_and_sep(max_len):
    vocab = _reference_vocab()
    item = wp.tokenize(vocab, REFERENCE_SENTENCE * 3, max_len=max_len)
    n = item.length
    assert item.input_ids.shape == (max_len,)
    assert item.input_ids[0] == vocab.cls_id
    assert item.input_ids[n - 1] == vocab.sep_id
    assert n == min(max_len, 2 + 24)
    assert item.attention_mask[:n].all() and not item.attention_mask[n:].any()


def test_tokenize_detokenize_round_trip():
    vocab = wp.build_vocab(["verify your account now , please .", "unknown"], 200)
    text = "Please verify your ACCOUNT now , please ."
    item = wp.tokenize(vocab, text, max_len=32)
    assert wp.detokenize(vocab, item.input_ids) == wp.pre_tokenize(text)


def test_continuation_pieces_glue_back():
    item = wp.tokenize(FIXTURE_VOCAB, "Playing unknown", max_len=10)
    assert wp.detokenize(FIXTURE_VOCAB, item.input_ids) == ["playing", "unknown"]


def test_vocab_file_round_trip(tmp_path):
    vocab = wp.build_vocab(FIVE_SENTENCES, 30)
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:4] == list(SPECIALS)
    assert WordPieceVocab.load(path) == vocab


def test_stack_batch_labels():
    vocab = _reference_vocab()
    items = [wp.tokenize(vocab, "please", 6, label=1), wp.tokenize(vocab, "verify", 6, label=0)]
    ids, mask, labels = wp.stack_batch(items)
    assert ids.shape == mask.shape == (2, 6)
    assert labels.tolist() == [1, 0]
    assert wp.stack_batch([wp.tokenize(vocab, "x", 6)])[2] is None
