"""Acceptance criteria, one test each; every test records a single PASS/FAIL line.

The lines are printed as they are recorded and again in the terminal summary.
"""

import json
import math
import time

import numpy as np
import pytest

from phishdual import cli, forest, tfidf
from phishdual.evaluation import ConfusionMatrix, confusion, f1_score, metrics
from phishdual.forest import ForestTrainConfig, RandomForest
from phishdual.textmodel import build_vocab, detokenize, tokenize
from phishdual.textmodel import encoder as enc

from oracles import brute_force_split, dense_tfidf, tally
from test_encoder import gradient_check
from test_forest import SPLIT_FIXTURES, _random_fixture
from test_tfidf import FIXTURE_CORPORA

RESULTS = []

pytestmark = pytest.mark.acceptance


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _cli(argv):
    return cli.main([str(a) for a in argv])


# ----------------------------------------------------------------------- 1

def test_criterion_1_tfidf_oracle():
    start = time.perf_counter()
    worst = 0.0
    for docs in FIXTURE_CORPORA:
        for norm in ("l2", "none"):
            model = tfidf.fit(docs, norm=norm)
            grams, _, oracle = dense_tfidf(docs, norm=norm)
            assert list(model.vocabulary.grams) == grams
            for q in docs:
                diff = np.abs(model.transform(q).to_dense(model.n_features) - oracle(q))
                worst = max(worst, float(diff.max(initial=0.0)))
    hand = tfidf.fit(["abc", "abd", "xyz"])
    idf_ab = hand.idf[hand.vocabulary.gram_to_index["ab"]]
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and abs(idf_ab - 1.28768) < 1e-5 and elapsed < 1.0
    record(1, ok, f"max |diff| {worst:.1e} <= 1e-12, idf(ab) {idf_ab:.5f} ~ 1.28768, {elapsed:.2f}s < 1s")


# ----------------------------------------------------------------------- 2

@pytest.mark.slow
def test_criterion_2_forest_beats_logreg(tmp_path, data_dir):
    seeds = (0, 1, 2)
    wins, scores, slowest = 0, [], 0.0
    floor_ok = True
    for seed in seeds:
        f1 = {}
        for model in ("rf", "logreg"):
            out = tmp_path / f"{model}-{seed}"
            start = time.perf_counter()
            code = _cli(["train-url", "--train", data_dir / "mini_urls.csv", "--paper-defaults",
                         "--model", model, "--seed", seed, "--output-dir", out])
            slowest = max(slowest, time.perf_counter() - start)
            assert code == 0
            f1[model] = json.loads((out / "metrics.json").read_text())["test"]["f1"]
        wins += f1["rf"] >= f1["logreg"]
        floor_ok &= min(f1.values()) >= 0.85
        scores.append(f"seed {seed}: rf {f1['rf']:.4f} / logreg {f1['logreg']:.4f}")
    ok = wins >= 2 and floor_ok and slowest < 120
    record(2, ok, f"rf >= logreg on {wins}/3 seeds (need 2), all F1 >= 0.85: {floor_ok}, "
                  f"slowest run {slowest:.1f}s < 120s; " + "; ".join(scores))


# ----------------------------------------------------------------------- 3

@pytest.mark.slow
def test_criterion_3a_gradient_check():
    results = [gradient_check(seed) for seed in range(20)]
    worst = max(r[0] for r in results)
    key_bias = max(r[1] for r in results)
    record("3a", worst < 1e-4 and key_bias < 1e-10,
           f"20 seeds, worst relative error {worst:.2e} < 1e-4, key-bias gradient {key_bias:.1e}")


def test_criterion_3b_padding_invariance():
    cfg = enc.EncoderConfig(vocab_size=13, num_layers=2, num_heads=2, d_model=8, d_ff=16, max_len=32)
    worst = 0.0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        params = {k: v + rng.normal(scale=0.5, size=v.shape) for k, v in enc.init_params(cfg, seed).items()}
        batch = int(rng.integers(1, 4))
        n = int(rng.integers(2, 10))
        ids = rng.integers(1, 13, size=(batch, n))
        base, _ = enc.forward(params, cfg, ids, np.ones_like(ids))
        for pad in (1, 5, 32 - n):
            padded = np.concatenate([ids, np.zeros((batch, pad), dtype=int)], axis=1)
            mask = np.concatenate([np.ones_like(ids), np.zeros((batch, pad), dtype=int)], axis=1)
            got, _ = enc.forward(params, cfg, padded, mask)
            worst = max(worst, float(np.abs(got - base).max()))
    record("3b", worst < 1e-6, f"max logit change from padding {worst:.1e} < 1e-6")


@pytest.mark.slow
def test_criterion_3c_overfit_gate(tmp_path, data_dir):
    out = tmp_path / "text"
    start = time.perf_counter()
    code = _cli(["train-text", "--train", data_dir / "toy_emails.csv", "--epochs", "200", "--split-ratio", "1.0",
                 "--seed", "0", "--output-dir", out])
    elapsed = time.perf_counter() - start
    assert code == 0
    report = json.loads((out / "metrics.json").read_text())
    history = [h["train_accuracy"] for h in report["history"]]
    first = next((h["epoch"] for h in report["history"] if h["train_accuracy"] >= 0.95), None)
    final = report["train"]["accuracy"]
    ok = first is not None and final >= 0.95 and elapsed < 300
    record("3c", ok, f"train accuracy reaches {max(history):.3f} (first >= 0.95 at epoch {first}), "
                     f"checkpoint accuracy on all 64 {final:.3f} >= 0.95, {elapsed:.1f}s < 300s")


def test_criterion_3d_tokenization_example():
    sentence = "Please verify your account to avoid suspension."
    expected = ["[CLS]", "please", "verify", "your", "account", "to", "avoid", "suspension", ".", "[SEP]"]
    vocab = build_vocab([sentence], 64)
    item = tokenize(vocab, sentence)
    got = [vocab.tokens[i] for i in item.input_ids[: item.length]]
    ok = got == expected and item.input_ids.shape == (256,) and detokenize(vocab, item.input_ids) == expected[1:-1]
    record("3d", ok, f"tokens {got}")


# ----------------------------------------------------------------------- 4

def test_criterion_4_metrics_exactness():
    checks = []
    m = metrics(ConfusionMatrix(tp=8, fp=2, fn=1, tn=9))
    checks.append(m.precision == 0.8 and m.recall == 8 / 9 and m.accuracy == 0.85
                  and math.isclose(m.f1, 16 / 19, abs_tol=1e-15))
    preds = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1]
    labels = [1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0]
    cm = confusion(preds, labels)
    checks.append((cm.tp, cm.fp, cm.fn, cm.tn) == tally(preds, labels) == (6, 4, 4, 6))
    checks.append(metrics(confusion([1, 0, 1], [1, 0, 1])).f1 == 1.0)
    zero = metrics(ConfusionMatrix(0, 0, 0, 3))
    checks.append((zero.precision, zero.recall, zero.f1, zero.accuracy) == (0.0, 0.0, 0.0, 1.0))
    f1 = f1_score(0.993, 0.996)
    checks.append(abs(f1 - 0.9945) < 5e-5 and abs(f1 - 0.995) < 1e-3)
    record(4, all(checks), f"{sum(checks)}/{len(checks)} fixtures exact; f1(0.993, 0.996) = {f1:.5f} vs reported 0.995")


# ----------------------------------------------------------------------- 5

def test_criterion_5_forest_correctness(tmp_path):
    cases = [(X, np.array(y), list(range(X.shape[0]))) for X, y in SPLIT_FIXTURES]
    cases += [_random_fixture(seed) for seed in range(100)]
    mismatches = 0
    for X, y, rows in cases:
        feats = list(range(X.shape[1]))
        got = forest.best_split(rows, X, y, feats)
        want = brute_force_split(X, y, list(rows), feats)
        if want is None:
            mismatches += got is not None
        else:
            mismatches += not (got is not None and (got.feature, got.threshold) == (want[0], want[1])
                               and abs(got.impurity_decrease - float(want[2])) < 1e-12)

    rng = np.random.default_rng(0)
    X = rng.random((60, 8)) * (rng.random((60, 8)) < 0.6)
    y = (X[:, 0] + X[:, 3] > 0.5).astype(int)
    single = forest.train_forest(X, y, ForestTrainConfig(n_estimators=1, bootstrap=False, max_features="all"))
    train_acc = float(np.mean((forest.predict_proba_many(single, X) >= 0.5).astype(int) == y))

    cfg = ForestTrainConfig(n_estimators=12, seed=3)
    seq = forest.train_forest(X, y, cfg, n_jobs=1)
    par = forest.train_forest(X, y, cfg, n_jobs=4)
    path = tmp_path / "rf.json"
    seq.save(path)
    back = RandomForest.load(path)
    round_trip = np.array_equal(forest.predict_proba_many(back, X), forest.predict_proba_many(seq, X))
    identical = seq.dumps() == par.dumps()
    ok = mismatches == 0 and train_acc == 1.0 and round_trip and identical
    record(5, ok, f"best_split vs exhaustive: {len(cases) - mismatches}/{len(cases)} agree; "
                  f"unrestricted tree train accuracy {train_acc:.3f}; round-trip identical: {round_trip}; "
                  f"parallel == sequential bytes: {identical}")


# ----------------------------------------------------------------------- 6

def test_criterion_6_end_to_end(tmp_path, fixtures_dir, capsys):
    start = time.perf_counter()
    code = _cli(["classify", fixtures_dir / "emails", "--output-dir", tmp_path])
    elapsed = time.perf_counter() - start
    out = capsys.readouterr().out
    reports = {r["file"]: r["report"] for r in map(json.loads, out.splitlines())}
    phish, legit = reports["bank_phishing.eml"], reports["meeting_notes.eml"]
    ok = (code == 0 and phish["label"] == "phishing" and legit["label"] == "legitimate"
          and phish["url_probs"][0]["url"] == "www.verify-benbank.com" and elapsed < 5.0)
    record(6, ok, f"phishing fixture -> {phish['label']} (fused {phish['fused_score']:.3f}), "
                  f"benign no-URL fixture -> {legit['label']} (fused {legit['fused_score']:.3f}), "
                  f"{elapsed:.2f}s < 5s")


# ----------------------------------------------------------------------- 7

def test_criterion_7_determinism(tmp_path, data_dir):
    urls = data_dir / "mini_urls.csv"
    emails = data_dir / "toy_emails.csv"
    runs = [
        ("prep", ["prep", "emails", "--input", emails, "--target-size", "40", "--min-text-len", "5"],
         ["emails.prep.csv"]),
        ("prep", ["prep", "urls", "--input", urls, "--target-size", "500"], ["urls.prep.csv"]),
        ("train-url", ["train-url", "--train", urls, "--model", "rf", "--n-estimators", "10"],
         ["tfidf.json", "url_model.json", "metrics.json"]),
        ("train-url", ["train-url", "--train", urls, "--model", "logreg"],
         ["tfidf.json", "url_model.json", "metrics.json"]),
        ("train-text", ["train-text", "--train", emails, "--epochs", "3", "--max-len", "64"],
         ["vocab.txt", "params.json", "metrics.json"]),
    ]
    same = []
    for i, (name, argv, files) in enumerate(runs):
        first, again = tmp_path / f"run{i}", tmp_path / f"rerun{i}"
        assert _cli(argv + ["--seed", "5", "--output-dir", first]) == 0
        assert _cli(["rerun", first / f"manifest-{name}.json", "--output-dir", again]) == 0
        same.append(all((first / f).read_bytes() == (again / f).read_bytes() for f in files))
    record(7, all(same), f"{sum(same)}/{len(same)} prep/train runs byte-identical when replayed from manifest")
