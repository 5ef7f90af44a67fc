"""Loading, cleaning, subsampling and splitting of the email and URL corpora."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._seeding import make_rng
from .errors import DataError

EMAIL_HEADER = ("text", "label")
RAW_URL_HEADER = ("url", "type")
URL_HEADER = ("url", "label")

# Raw URL categories of the source dataset; everything non-benign is malicious.
URL_LABEL_MAP = {"benign": 0, "phishing": 1, "malware": 1, "defacement": 1}


class BalanceWarning(UserWarning):
    """Balanced subsampling could not give each class half of the target."""


@dataclass(frozen=True)
class EmailRecord:
    id: int | str
    text: str | None
    label: int


@dataclass(frozen=True)
class RawUrlRecord:
    url: str | None
    type: str | int


@dataclass(frozen=True)
class UrlRecord:
    url: str
    label: int


@dataclass(frozen=True)
class PrepConfig:
    min_text_len: int = 20
    min_url_len: int = 10
    email_target_size: int = 7500
    url_target_size: int = 20000
    seed: int = 0
    balance: bool = True
    require_dot: bool = False

    def __post_init__(self):
        if self.email_target_size <= 0 or self.url_target_size <= 0:
            raise ValueError("target sizes must be positive")
        if self.min_url_len < 1:
            raise ValueError("min_url_len must be >= 1")
        if self.min_text_len < 0:
            raise ValueError("min_text_len must be >= 0")


@dataclass(frozen=True)
class DatasetSplit:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]


# --------------------------------------------------------------------- CSV io

def _read_rows(path, expected_header):
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader, None)
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: {exc}", row=1) from exc
        if header is None:
            return []
        header = tuple(h.strip().lower() for h in header)
        if header != tuple(expected_header):
            raise DataError(
                f"{path}: expected header {','.join(expected_header)!r}, got {','.join(header)!r}",
                row=1,
            )
        rows = []
        row_no = 1
        try:
            for row_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(expected_header):
                    raise DataError(
                        f"expected {len(expected_header)} fields, got {len(row)}", row=row_no
                    )
                rows.append((row_no, row))
        except (csv.Error, UnicodeDecodeError) as exc:
            raise DataError(f"{path}: {exc}", row=row_no + 1) from exc
    return rows


def _parse_binary_label(value, row_no):
    v = value.strip()
    if v not in ("0", "1"):
        raise DataError(f"label must be 0 or 1, got {value!r}", row=row_no)
    return int(v)


def load_email_csv(path) -> list[EmailRecord]:
    """Read a ``text,label`` CSV.  Record ids are 0-based data-row positions."""
    rows = _read_rows(path, EMAIL_HEADER)
    return [
        EmailRecord(id=i, text=text, label=_parse_binary_label(label, row_no))
        for i, (row_no, (text, label)) in enumerate(rows)
    ]


def load_url_csv(path) -> list[RawUrlRecord]:
    """Read a raw ``url,type`` CSV (types are validated by :func:`preprocess_urls`)."""
    return [RawUrlRecord(url=url, type=kind) for _, (url, kind) in _read_rows(path, RAW_URL_HEADER)]


def load_labeled_url_csv(path) -> list[UrlRecord]:
    """Read a cleaned ``url,label`` CSV as written by :func:`write_url_csv`."""
    return [
        UrlRecord(url=url, label=_parse_binary_label(label, row_no))
        for row_no, (url, label) in _read_rows(path, URL_HEADER)
    ]


def read_url_dataset(path) -> list[UrlRecord]:
    """Load either URL CSV flavour, mapping raw types to binary labels."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        header = next(csv.reader(fh), [])
    header = tuple(h.strip().lower() for h in header)
    if header == RAW_URL_HEADER:
        return [UrlRecord(r.url, map_url_label(r.type, row)) for row, r in enumerate(load_url_csv(path), 2)]
    return load_labeled_url_csv(path)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)


def write_email_csv(path, records: Sequence[EmailRecord]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(EMAIL_HEADER)
        for r in records:
            w.writerow((r.text, r.label))


def write_url_csv(path, records: Sequence[UrlRecord]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(URL_HEADER)
        for r in records:
            w.writerow((r.url, r.label))


# ------------------------------------------------------------- preprocessing

def _is_null(text):
    return text is None or (isinstance(text, float) and math.isnan(text)) or not str(text).strip()


def _dedup_first(items, key):
    seen = set()
    out = []
    for item in items:
        k = key(item)
        if k not in seen:
            seen.add(k)
            out.append(item)
    return out


def _sample_sorted(rng, n_available, k):
    """``k`` distinct positions out of ``n_available``, returned in ascending order."""
    if k >= n_available:
        return np.arange(n_available)
    return np.sort(rng.choice(n_available, size=k, replace=False))


def preprocess_emails(records: Sequence[EmailRecord], config: PrepConfig) -> list[EmailRecord]:
    """Null drop, lowercase, exact dedup, short-text drop, then optional balancing.

    Balancing keeps ``target // 2`` phishing and the rest benign.  When a class
    is short, all of it is kept and the other class fills the remainder; a
    :class:`BalanceWarning` is emitted.  Survivors keep their input order.
    """
    out = [r for r in records if not _is_null(r.text)]
    out = [EmailRecord(r.id, str(r.text).lower(), int(r.label)) for r in out]
    out = _dedup_first(out, key=lambda r: r.text)
    out = [r for r in out if len(r.text) >= config.min_text_len]
    if not config.balance:
        return out

    target = config.email_target_size
    pos = [i for i, r in enumerate(out) if r.label == 1]
    neg = [i for i, r in enumerate(out) if r.label == 0]
    want_pos = target // 2
    want_neg = target - want_pos
    if len(pos) < want_pos or len(neg) < want_neg:
        warnings.warn(
            f"cannot balance to {target}: {len(pos)} phishing / {len(neg)} benign available",
            BalanceWarning,
            stacklevel=2,
        )
        if len(pos) < want_pos:
            want_pos = len(pos)
            want_neg = min(len(neg), target - want_pos)
        else:
            want_neg = len(neg)
            want_pos = min(len(pos), target - want_neg)

    rng = make_rng(config.seed)
    keep = {neg[i] for i in _sample_sorted(rng, len(neg), want_neg)}
    keep |= {pos[i] for i in _sample_sorted(rng, len(pos), want_pos)}
    return [r for i, r in enumerate(out) if i in keep]


def map_url_label(raw, row=None) -> int:
    if isinstance(raw, (int, np.integer)) and not isinstance(raw, bool) and raw in (0, 1):
        return int(raw)
    key = str(raw).strip().lower()
    if key in URL_LABEL_MAP:
        return URL_LABEL_MAP[key]
    if key in ("0", "1"):
        return int(key)
    raise DataError(f"unknown URL label {raw!r}", row=row)


def preprocess_urls(records: Sequence[RawUrlRecord | UrlRecord], config: PrepConfig) -> list[UrlRecord]:
    """Binary label mapping, cleaning and class-ratio-preserving subsample."""
    labelled = []
    for i, r in enumerate(records):
        raw = r.type if isinstance(r, RawUrlRecord) else r.label
        try:
            labelled.append((r.url, map_url_label(raw)))
        except DataError as exc:
            raise DataError(f"record {i}: {exc}") from exc

    out = [UrlRecord(str(url).lower(), label) for url, label in labelled if not _is_null(url)]
    out = _dedup_first(out, key=lambda r: r.url)
    out = [r for r in out if len(r.url) >= config.min_url_len]
    if config.require_dot:
        out = [r for r in out if "." in r.url]

    target = config.url_target_size
    if len(out) <= target:
        return out
    pos = [i for i, r in enumerate(out) if r.label == 1]
    neg = [i for i, r in enumerate(out) if r.label == 0]
    want_pos = int(round(target * len(pos) / len(out)))
    want_neg = target - want_pos
    rng = make_rng(config.seed)
    keep = {neg[i] for i in _sample_sorted(rng, len(neg), want_neg)}
    keep |= {pos[i] for i in _sample_sorted(rng, len(pos), want_pos)}
    return [r for i, r in enumerate(out) if i in keep]


# ------------------------------------------------------------------ splitting

def split(n: int, ratio: float = 0.8, seed: int = 0) -> DatasetSplit:
    """Seeded shuffle of ``range(n)``; the first ``floor(ratio * n)`` go to train."""
    if n < 2:
        raise ValueError(f"need at least 2 records to split, got {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    # Guard against 0.29 * 100 == 28.999999999999996 style float artefacts.
    n_train = int(math.floor(ratio * n + 1e-9))
    perm = make_rng(seed).permutation(n)
    return DatasetSplit(
        train_indices=tuple(int(i) for i in perm[:n_train]),
        test_indices=tuple(int(i) for i in perm[n_train:]),
    )
