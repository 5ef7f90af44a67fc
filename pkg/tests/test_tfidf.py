import json
import math

import numpy as np
import pytest

from phishdual import tfidf
from phishdual.errors import ModelFormatError

from oracles import dense_tfidf, ngram_counts

# Small corpora (at most 10 strings, each at most 12 characters).
FIXTURE_CORPORA = [
    ["abc", "abd", "xyz"],
    ["login", "secure", "verify", "loginsecure"],
    ["aaa", "aaaa", "ab"],
    ["paypa1.com", "paypal.com", "pay-pal.xyz", "a.b", "www.x.io"],
    ["http://a.co", "http://b.co", "https://a.co", "a", "", "zz"],
    ["ünïcode.de", "unicode.de", "ü"],
    ["x" * 12, "y" * 12, "xy" * 6, "yx" * 6, "xyz", "zyx", "q", "qq", "qqq", "qqqq"],
]


def test_ngram_examples():
    assert tfidf.extract_char_ngrams("ab") == {"ab": 1}
    assert tfidf.extract_char_ngrams("aaa", 2, 3) == {"aa": 2, "aaa": 1}
    grams = tfidf.extract_char_ngrams("login")
    assert sum(grams.values()) == 4 + 3 + 2 + 1
    assert grams["login"] == 1
    assert tfidf.extract_char_ngrams("a") == {}


@pytest.mark.parametrize("s", ["", "a", "login", "https://verify-benbank.com/x", "ééé"])
def test_ngram_total_matches_formula(s):
    total = sum(tfidf.extract_char_ngrams(s).values())
    assert total == sum(max(0, len(s) - n + 1) for n in range(2, 7))
    assert dict(tfidf.extract_char_ngrams(s)) == ngram_counts(s, 2, 6)


def test_hand_computed_idf():
    model = tfidf.fit(["abc", "abd", "xyz"])
    idx = model.vocabulary.gram_to_index
    assert model.idf[idx["ab"]] == pytest.approx(math.log(4 / 3) + 1, abs=1e-15)
    assert model.idf[idx["ab"]] == pytest.approx(1.28768, abs=1e-5)
    assert model.idf[idx["abc"]] == pytest.approx(math.log(2) + 1, abs=1e-15)
    assert model.vocabulary.document_frequency[idx["ab"]] == 2


def test_transform_abc_against_hand_weights():
    model = tfidf.fit(["abc", "abd", "xyz"])
    vec = model.transform("abc")
    idx = model.vocabulary.gram_to_index
    raw = {"ab": math.log(4 / 3) + 1, "bc": math.log(2) + 1, "abc": math.log(2) + 1}
    length = math.sqrt(sum(v * v for v in raw.values()))
    got = vec.as_dict()
    assert set(got) == {idx[g] for g in raw}
    for g, w in raw.items():
        assert got[idx[g]] == pytest.approx(w / length, abs=1e-12)


def test_single_document_corpus():
    model = tfidf.fit(["abcab"])
    assert np.all(model.idf == 1.0)
    vec = model.transform("abcd")
    assert vec.norm() == pytest.approx(1.0, abs=1e-12)


def test_ubiquitous_gram_has_unit_idf():
    model = tfidf.fit(["xab", "abx", "zab"])
    assert model.idf[model.vocabulary.gram_to_index["ab"]] == 1.0


def test_empty_and_oov_strings_give_empty_vectors():
    model = tfidf.fit(["abc"])
    assert model.transform("").nnz == 0
    assert model.transform("zzzz").nnz == 0


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        tfidf.fit([])


@pytest.mark.parametrize("corpus", FIXTURE_CORPORA)
@pytest.mark.parametrize("norm", ["l2", "none"])
def test_dense_oracle_equivalence(corpus, norm):
    model = tfidf.fit(corpus, norm=norm)
    grams, idf, oracle = dense_tfidf(corpus, norm=norm)
    assert list(model.vocabulary.grams) == grams
    np.testing.assert_allclose(model.idf, idf, rtol=0, atol=1e-15)
    queries = list(corpus) + ["abcxyz", "login.secure", "qqqqqqqq", ""]
    for q in queries:
        got = model.transform(q).to_dense(model.n_features)
        np.testing.assert_allclose(got, oracle(q), rtol=0, atol=1e-12)


def test_transform_many_matches_single():
    corpus = FIXTURE_CORPORA[3]
    model = tfidf.fit(corpus)
    X = tfidf.transform_many(model, corpus + ["nothing"])
    for i, s in enumerate(corpus + ["nothing"]):
        np.testing.assert_array_equal(X[i].toarray().ravel(), model.transform(s).to_dense(model.n_features))


def test_corpus_order_does_not_matter():
    corpus = FIXTURE_CORPORA[1]
    a = tfidf.fit(corpus)
    b = tfidf.fit(list(reversed(corpus)))
    assert a.to_dict() == b.to_dict()


def test_sparse_vector_invariants():
    model = tfidf.fit(FIXTURE_CORPORA[3])
    for s in FIXTURE_CORPORA[3]:
        v = model.transform(s)
        assert np.all(np.diff(v.indices) > 0)
        assert np.all(v.values > 0)
        assert v.nnz <= len(set(ngram_counts(s, 2, 6)))
        assert v.dot(v) == pytest.approx(1.0, abs=1e-9)


def test_min_df_prunes():
    model = tfidf.fit(["abc", "abd", "xyz"], min_df=2)
    assert list(model.vocabulary.grams) == ["ab"]


def test_serialization_round_trip(tmp_path):
    model = tfidf.fit(FIXTURE_CORPORA[3] + FIXTURE_CORPORA[5])
    path = tmp_path / "tfidf.json"
    model.save(path)
    back = tfidf.TfidfModel.load(path)
    assert back.vocabulary.grams == model.vocabulary.grams
    assert np.max(np.abs(back.idf - model.idf)) <= 1e-15
    assert back.to_dict() == model.to_dict()
    data = json.loads(path.read_text(encoding="utf-8"))
    assert data["format_version"] == 1
    assert data["grams"][0][1] == 0
    assert [g[0] for g in data["grams"]] == sorted(g[0] for g in data["grams"])


def test_unsupported_version_rejected():
    data = tfidf.fit(["abc"]).to_dict()
    data["format_version"] = 99
    with pytest.raises(ModelFormatError):
        tfidf.TfidfModel.from_dict(data)
