import json
import math

import pytest

from phishdual import forest
from phishdual.fusion import FusionConfig, VerdictReport, classify_email, fuse, url_model_proba
from phishdual.mailparse import parse_email


def test_hand_arithmetic_example():
    assert fuse(0.2, [0.9, 0.1], FusionConfig(0.5, 0.5)) == pytest.approx(0.55, abs=1e-15)


def test_mean_aggregation():
    assert fuse(0.2, [0.9, 0.1], FusionConfig(url_aggregation="mean")) == pytest.approx(0.35, abs=1e-15)


@pytest.mark.parametrize("p", [0.0, 0.13, 0.5, 0.999, 1.0])
def test_zero_url_weight_returns_text_prob(p):
    assert fuse(p, [0.7, 0.2], FusionConfig(w_text=1.0, w_url=0.0)) == p


@pytest.mark.parametrize("w", [(1, 0), (0, 1), (0.3, 0.7), (5, 1)])
def test_unanimity(w):
    cfg = FusionConfig(*w)
    assert fuse(1.0, [1.0, 1.0], cfg) == 1.0
    assert fuse(0.0, [0.0], cfg) == 0.0


def test_no_urls_falls_back_to_text():
    assert fuse(0.37, [], FusionConfig(0.1, 0.9)) == 0.37


def test_weights_are_normalised():
    cfg = FusionConfig(2.0, 6.0)
    assert (cfg.w_text, cfg.w_url) == (0.25, 0.75)
    assert fuse(1.0, [0.0], cfg) == pytest.approx(0.25)


@pytest.mark.parametrize("kw", [dict(w_text=-1), dict(w_text=0, w_url=0), dict(url_aggregation="min")])
def test_config_errors(kw):
    with pytest.raises(ValueError):
        FusionConfig(**kw)


@pytest.mark.parametrize("t,urls", [(1.5, []), (-0.1, [0.2]), (0.5, [1.01]), (math.nan, [0.3]), (0.5, [math.nan])])
def test_probability_range_errors(t, urls):
    with pytest.raises(ValueError):
        fuse(t, urls)


def test_report_serialisation():
    rep = VerdictReport(0.25, (0.8,), 0.525, 1, ("http://a.com",), ("w",))
    data = json.loads(rep.to_json())
    assert data["label"] == "phishing"
    assert data["url_probs"] == [{"url": "http://a.com", "prob": 0.8}]
    assert set(data) == {"format_version", "text_prob", "url_probs", "fused_score", "label", "warnings"}
    assert VerdictReport(0.1, (), 0.1, 0).label_name == "legitimate"


def test_lookalike_bank_email_flagged(bundled_models, fixtures_dir):
    text_model, tf, url_model = bundled_models
    raw = (fixtures_dir / "emails" / "bank_phishing.eml").read_bytes()
    rep = classify_email(raw, text_model, url_model, tf)
    assert rep.extracted_urls == ("www.verify-benbank.com",)
    assert rep.label == 1
    assert rep.label_name == "phishing"


def test_legitimate_email_without_urls(bundled_models, fixtures_dir):
    text_model, tf, url_model = bundled_models
    raw = (fixtures_dir / "emails" / "meeting_notes.eml").read_bytes()
    rep = classify_email(raw, text_model, url_model, tf)
    assert rep.url_probs == ()
    assert rep.fused_score == rep.text_prob
    assert rep.label == 0


def test_pipeline_composition(bundled_models, fixtures_dir):
    text_model, tf, url_model = bundled_models
    raw = (fixtures_dir / "emails" / "bank_phishing.eml").read_bytes()
    parsed = parse_email(raw)
    t = float(text_model.predict_proba([parsed.body_text])[0])
    leaf_probs = []
    for url in parsed.urls:
        x = tf.transform(url.lower()).as_dict()
        per_tree = [tree.predict_proba(x) for tree in url_model.trees]
        leaf_probs.append(math.fsum(per_tree) / len(per_tree))
    want = 0.5 * t + 0.5 * max(leaf_probs)
    rep = classify_email(raw, text_model, url_model, tf, FusionConfig())
    assert rep.text_prob == t
    assert list(rep.url_probs) == pytest.approx(leaf_probs, abs=1e-15)
    assert rep.fused_score == pytest.approx(want, abs=1e-12)


def test_threshold_changes_label_only(bundled_models, fixtures_dir):
    text_model, tf, url_model = bundled_models
    raw = (fixtures_dir / "emails" / "bank_phishing.eml").read_bytes()
    low = classify_email(raw, text_model, url_model, tf, FusionConfig(threshold=0.0))
    high = classify_email(raw, text_model, url_model, tf, FusionConfig(threshold=1.01))
    assert low.fused_score == high.fused_score
    assert (low.label, high.label) == (1, 0)


def test_url_model_dimension_mismatch(bundled_models):
    _, tf, _ = bundled_models
    small = forest.train_forest([[0.0, 1.0], [1.0, 0.0]], [0, 1], forest.ForestTrainConfig(n_estimators=1))
    with pytest.raises(ValueError):
        url_model_proba(small, tf, ["http://a.com"])
    assert url_model_proba(small, tf, []) == []
