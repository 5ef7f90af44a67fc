"""Weighted decision fusion of the text and URL classifier outputs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from . import forest as rf
from . import linear
from .mailparse import parse_email
from .textmodel.training import TextModel
from .tfidf import TfidfModel

FORMAT_VERSION = 1
LABEL_NAMES = {0: "legitimate", 1: "phishing"}


@dataclass(frozen=True)
class FusionConfig:
    w_text: float = 0.5
    w_url: float = 0.5
    url_aggregation: str = "max"
    threshold: float = 0.5

    def __post_init__(self):
        if self.w_text < 0 or self.w_url < 0:
            raise ValueError("fusion weights must be nonnegative")
        total = self.w_text + self.w_url
        if not total > 0:
            raise ValueError("fusion weights must not both be zero")
        if self.url_aggregation not in ("max", "mean"):
            raise ValueError(f"unknown url_aggregation {self.url_aggregation!r}")
        # Normalised once here so every consumer sees weights summing to 1.
        object.__setattr__(self, "w_text", self.w_text / total)
        object.__setattr__(self, "w_url", self.w_url / total)


def _check_prob(p, what):
    p = float(p)
    if not 0.0 <= p <= 1.0:  # also rejects NaN
        raise ValueError(f"{what} must be in [0, 1], got {p!r}")
    return p


def fuse(text_prob: float, url_probs: Sequence[float], config: FusionConfig = FusionConfig()) -> float:
    """Convex combination of the text probability and the aggregated URL probability.

    Without URLs the text probability is returned unchanged.
    """
    t = _check_prob(text_prob, "text_prob")
    urls = [_check_prob(p, "url prob") for p in url_probs]
    if not urls:
        return t
    u = max(urls) if config.url_aggregation == "max" else math.fsum(urls) / len(urls)
    fused = config.w_text * t + config.w_url * u
    # Guard against 1 ulp of drift outside the hull of the inputs.
    return min(max(fused, min(t, u)), max(t, u))


@dataclass(frozen=True)
class VerdictReport:
    text_prob: float
    url_probs: tuple[float, ...]
    fused_score: float
    label: int
    extracted_urls: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    @property
    def label_name(self) -> str:
        return LABEL_NAMES[self.label]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "text_prob": self.text_prob,
            "url_probs": [{"url": u, "prob": p} for u, p in zip(self.extracted_urls, self.url_probs)],
            "fused_score": self.fused_score,
            "label": self.label_name,
            "warnings": list(self.warnings),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def url_model_proba(model, tfidf: TfidfModel, urls: Sequence[str]) -> list[float]:
    """Phishing probability for each URL under a logistic-regression or forest model."""
    if not urls:
        return []
    if model.n_features != tfidf.n_features:
        raise ValueError(
            f"URL model expects {model.n_features} features but the TF-IDF model has {tfidf.n_features}"
        )
    vectors = [tfidf.transform(u.lower()) for u in urls]
    if isinstance(model, linear.LogRegModel):
        return [linear.predict_proba(model, v) for v in vectors]
    if isinstance(model, rf.RandomForest):
        return [rf.predict_forest(model, v)[1] for v in vectors]
    raise TypeError(f"unsupported URL model type {type(model).__name__}")


def classify_email(raw: bytes | str, text_model: TextModel, url_model, tfidf: TfidfModel,
                   config: FusionConfig = FusionConfig()) -> VerdictReport:
    parsed = parse_email(raw)
    text_prob = float(text_model.predict_proba([parsed.body_text])[0])
    url_probs = url_model_proba(url_model, tfidf, parsed.urls)
    score = fuse(text_prob, url_probs, config)
    return VerdictReport(
        text_prob=text_prob,
        url_probs=tuple(url_probs),
        fused_score=score,
        label=int(score >= config.threshold),
        extracted_urls=tuple(parsed.urls),
        warnings=parsed.warnings,
    )
