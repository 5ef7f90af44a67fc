"""Command-line interface: prep, train-url, train-text, classify, eval and rerun.

Option values are resolved in layers: built-in defaults, then the published
reference settings when ``--paper-defaults`` is given, then ``--config`` file entries,
then flags given on the command line.  Every run writes a manifest JSON next
to its outputs; ``phishdual rerun MANIFEST`` replays it.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, corpus, evaluation, forest, fusion, linear, tfidf
from .errors import DataError, ModelFormatError
from .textmodel import training
from .textmodel.wordpiece import WordPieceVocab, build_vocab

log = logging.getLogger("phishdual")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
MANIFEST_VERSION = 1
METRICS_VERSION = 1

TFIDF_FILE = "tfidf.json"
URL_MODEL_FILE = "url_model.json"
VOCAB_FILE = "vocab.txt"
PARAMS_FILE = "params.json"


class UsageError(Exception):
    pass


# ------------------------------------------------------------ option types

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _nonneg_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a number >= 0, got {text}")
    return value


def _unit_float(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a number in [0, 1], got {text}")
    return value


def _ratio(text):
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a ratio in (0, 1], got {text}")
    return value


def _optional_int(text):
    if str(text).lower() in ("none", ""):
        return None
    return _positive_int(text)


def _max_features(text):
    text = str(text)
    if text in ("sqrt", "log2", "all"):
        return text
    return _positive_int(text)


def _bool(text):
    if isinstance(text, bool):
        return text
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text}")


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable
    default: Any
    help: str
    reference: Any = None
    choices: tuple | None = None

    @property
    def flag(self):
        return "--" + self.name.replace("_", "-")


SEED_OPT = Opt("seed", int, 0, "master seed for sampling, splitting, init and shuffling")

PREP_OPTS = [
    Opt("min_text_len", _nonneg_int, 20, "drop email texts shorter than this"),
    Opt("min_url_len", _positive_int, 10, "drop URLs shorter than this", reference=10),
    Opt("target_size", _optional_int, None,
        "subsample size (default 7500 emails / 20000 URLs)"),
    Opt("balance", _bool, True, "balance email classes when subsampling"),
    Opt("require_dot", _bool, False, "drop URLs without a dot"),
]

SPLIT_OPT = Opt("split_ratio", _ratio, 0.8, "train fraction of the train/test split", reference=0.8)

URL_OPTS = [
    Opt("model", str, "rf", "URL classifier", choices=("rf", "logreg")),
    SPLIT_OPT,
    Opt("min_url_len", _positive_int, 10, "drop URLs shorter than this", reference=10),
    Opt("ngram_min", _positive_int, 2, "smallest character n-gram", reference=2),
    Opt("ngram_max", _positive_int, 6, "largest character n-gram", reference=6),
    Opt("n_estimators", _positive_int, 100, "trees in the forest", reference=100),
    Opt("max_depth", _optional_int, None, "tree depth limit (none for unlimited)"),
    Opt("min_samples_leaf", _positive_int, 1, "minimum samples per leaf"),
    Opt("max_features", _max_features, "sqrt", "features tried per split: sqrt, log2, all or a count"),
    Opt("n_jobs", int, 1, "forest training threads (-1 for all cores)"),
    Opt("lr", float, 0.1, "logistic regression learning rate"),
    Opt("epochs", _positive_int, 100, "logistic regression epochs"),
    Opt("l2", _nonneg_float, 1e-4, "logistic regression L2 strength"),
    Opt("batch_size", _optional_int, 32, "logistic regression batch size (none for full batch)"),
    Opt("tolerance", _nonneg_float, 1e-6, "logistic regression early-stop tolerance"),
]

TEXT_OPTS = [
    SPLIT_OPT,
    Opt("vocab_size", _positive_int, 2000, "target vocabulary size when building one"),
    Opt("epochs", _positive_int, 3, "training epochs", reference=3),
    Opt("lr", _nonneg_float, training.FROM_SCRATCH_LR, "learning rate", reference=training.FINE_TUNE_LR),
    Opt("batch_size", _positive_int, 8, "mini-batch size", reference=8),
    Opt("validation_fraction", float, 0.1, "share of the train split held out for checkpointing"),
    Opt("optimizer", str, "momentum", "update rule", choices=("momentum", "sgd")),
    Opt("momentum", _nonneg_float, 0.9, "momentum coefficient"),
    Opt("max_len", _positive_int, 256, "tokens per input, including [CLS] and [SEP]", reference=256),
    Opt("layers", _positive_int, 2, "encoder layers"),
    Opt("heads", _positive_int, 2, "attention heads"),
    Opt("d_model", _positive_int, 32, "hidden size"),
    Opt("d_ff", _positive_int, 64, "feed-forward size"),
    Opt("dropout", _unit_float, 0.0, "dropout rate"),
]

FUSION_OPTS = [
    Opt("w_text", _nonneg_float, 0.5, "weight of the text probability"),
    Opt("w_url", _nonneg_float, 0.5, "weight of the aggregated URL probability"),
    Opt("url_aggregation", str, "max", "how per-URL probabilities are combined", choices=("max", "mean")),
    Opt("threshold", float, 0.5, "phishing threshold on the fused score"),
]

EVAL_OPTS = [
    Opt("threshold", float, 0.5, "decision threshold for model probabilities"),
]


# ----------------------------------------------------------------- manifest

def _abs(path):
    return str(Path(path).resolve())


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunResult:
    outputs: list[str]
    stdout: str = ""


def write_manifest(output_dir: Path, command: str, config: dict, inputs: dict, outputs, duration: float):
    manifest = {
        "format_version": MANIFEST_VERSION,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
        "inputs": inputs,
        "outputs": [_abs(p) for p in outputs],
        "duration_seconds": round(duration, 6),
        "tool_version": __version__,
    }
    path = output_dir / f"manifest-{command}.json"
    write_json(path, manifest)
    return path


# ---------------------------------------------------------------- bundles

def bundled_model_dir(kind: str) -> Path:
    return Path(str(resources.files("phishdual") / "data" / "models" / kind))


def load_url_model(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    kind = data.get("model_type")
    if kind == "logreg":
        return linear.LogRegModel.from_dict(data)
    if kind == "random_forest":
        return forest.RandomForest.from_dict(data)
    raise ModelFormatError(f"{path}: unknown model_type {kind!r}")


def load_url_bundle(directory):
    directory = Path(directory)
    tf = tfidf.TfidfModel.load(directory / TFIDF_FILE)
    model = load_url_model(directory / URL_MODEL_FILE)
    if model.n_features != tf.n_features:
        raise ModelFormatError(f"{directory}: URL model and TF-IDF vocabulary sizes differ")
    return tf, model


def _metrics_dict(pred, labels):
    return evaluation.evaluate(pred, labels).to_dict()


# --------------------------------------------------------------- commands

def run_prep(cfg, inputs, output_dir: Path) -> RunResult:
    kind = cfg["kind"]
    source = inputs["input"]
    default_target = 7500 if kind == "emails" else 20000
    target = cfg["target_size"] or default_target
    pc = corpus.PrepConfig(
        min_text_len=cfg["min_text_len"], min_url_len=cfg["min_url_len"],
        email_target_size=target if kind == "emails" else 7500,
        url_target_size=target if kind == "urls" else 20000,
        seed=cfg["seed"], balance=cfg["balance"], require_dot=cfg["require_dot"],
    )
    out = output_dir / f"{kind}.prep.csv"
    if kind == "emails":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", corpus.BalanceWarning)
            records = corpus.preprocess_emails(corpus.load_email_csv(source), pc)
        for w in caught:
            log.warning("%s", w.message)
        corpus.write_email_csv(out, records)
    else:
        records = corpus.preprocess_urls(corpus.read_url_dataset(source), pc)
        corpus.write_url_csv(out, records)
    return RunResult([str(out)], f"wrote {len(records)} records to {out}")


def _split_indices(n, ratio, seed):
    if ratio >= 1.0:
        return list(range(n)), []
    s = corpus.split(n, ratio, seed)
    return list(s.train_indices), list(s.test_indices)


def run_train_url(cfg, inputs, output_dir: Path) -> RunResult:
    if cfg["ngram_min"] > cfg["ngram_max"]:
        raise UsageError("--ngram-min must not exceed --ngram-max")
    seed = cfg["seed"]
    pc = corpus.PrepConfig(min_url_len=cfg["min_url_len"], seed=seed)
    records = corpus.preprocess_urls(corpus.read_url_dataset(inputs["train"]), pc)
    if len(records) < 2:
        raise DataError("need at least 2 URLs after cleaning")
    tr, te = _split_indices(len(records), cfg["split_ratio"], seed)
    urls = [r.url for r in records]
    y = np.array([r.label for r in records], dtype=np.int64)

    tf = tfidf.fit([urls[i] for i in tr], n_min=cfg["ngram_min"], n_max=cfg["ngram_max"])
    X = tfidf.transform_many(tf, urls)
    X_tr, y_tr = X[tr], y[tr]
    if cfg["model"] == "rf":
        fc = forest.ForestTrainConfig(
            n_estimators=cfg["n_estimators"], max_depth=cfg["max_depth"],
            min_samples_leaf=cfg["min_samples_leaf"], max_features=cfg["max_features"], seed=seed,
        )
        model = forest.train_forest(X_tr, y_tr, fc, n_jobs=cfg["n_jobs"], n_features=tf.n_features)
        proba = forest.predict_proba_many(model, X)
    else:
        lc = linear.LinearTrainConfig(
            learning_rate=cfg["lr"], epochs=cfg["epochs"], l2_lambda=cfg["l2"],
            tolerance=cfg["tolerance"], seed=seed, batch_size=cfg["batch_size"],
        )
        model = linear.train_logreg(X_tr, y_tr, lc, n_features=tf.n_features)
        proba = linear.predict_proba_many(model, X)
    pred = (proba >= 0.5).astype(np.int64)

    report = {"format_version": METRICS_VERSION, "model": cfg["model"],
              "n_train": len(tr), "n_test": len(te), "train": _metrics_dict(pred[tr], y[tr])}
    if te:
        report["test"] = _metrics_dict(pred[te], y[te])

    tf_path, model_path = output_dir / TFIDF_FILE, output_dir / URL_MODEL_FILE
    metrics_path = output_dir / "metrics.json"
    tf.save(tf_path)
    model.save(model_path)
    write_json(metrics_path, report)
    return RunResult([str(tf_path), str(model_path), str(metrics_path)], json.dumps(report, indent=2))


def text_train_config(cfg) -> training.TextTrainConfig:
    return training.TextTrainConfig(
        epochs=cfg["epochs"], learning_rate=cfg["lr"], batch_size=cfg["batch_size"], seed=cfg["seed"],
        validation_fraction=cfg["validation_fraction"], optimizer=cfg["optimizer"],
        momentum=cfg["momentum"], max_len=cfg["max_len"], num_layers=cfg["layers"],
        num_heads=cfg["heads"], d_model=cfg["d_model"], d_ff=cfg["d_ff"], dropout_rate=cfg["dropout"],
    )


def run_train_text(cfg, inputs, output_dir: Path) -> RunResult:
    tc = text_train_config(cfg)
    records = corpus.load_email_csv(inputs["train"])
    if len(records) < 2:
        raise DataError("need at least 2 emails")
    tr, te = _split_indices(len(records), cfg["split_ratio"], cfg["seed"])
    texts = [r.text for r in records]
    y = np.array([r.label for r in records], dtype=np.int64)
    train_texts = [texts[i] for i in tr]

    if inputs.get("vocab"):
        vocab = WordPieceVocab.load(inputs["vocab"])
    else:
        vocab = build_vocab(train_texts, cfg["vocab_size"])
    model = training.train_text(train_texts, y[tr], vocab, tc)
    proba = model.predict_proba(texts)
    pred = (proba >= 0.5).astype(np.int64)

    report = {
        "format_version": METRICS_VERSION, "n_train": len(tr), "n_test": len(te),
        "best_epoch": model.best_epoch, "train": _metrics_dict(pred[tr], y[tr]),
        "history": [
            {"epoch": h.epoch, "train_loss": h.train_loss, "train_accuracy": h.train_accuracy,
             "val_loss": h.val_loss}
            for h in model.history
        ],
    }
    if te:
        report["test"] = _metrics_dict(pred[te], y[te])

    model.save(output_dir)
    metrics_path = output_dir / "metrics.json"
    write_json(metrics_path, report)
    outs = [str(output_dir / VOCAB_FILE), str(output_dir / PARAMS_FILE), str(metrics_path)]
    summary = {k: v for k, v in report.items() if k != "history"}
    return RunResult(outs, json.dumps(summary, indent=2))


def _email_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted((p for p in path.iterdir() if p.is_file() and not p.name.startswith(".")),
                       key=lambda p: p.name)
        if not files:
            raise DataError(f"no email files in {path}")
        return files
    if not path.exists():
        raise DataError(f"no such file or directory: {path}")
    return [path]


def run_classify(cfg, inputs, output_dir: Path) -> RunResult:
    fc = fusion.FusionConfig(cfg["w_text"], cfg["w_url"], cfg["url_aggregation"], cfg["threshold"])
    text_model = training.TextModel.load(inputs.get("text_model") or bundled_model_dir("text"))
    tf, url_model = load_url_bundle(inputs.get("url_model") or bundled_model_dir("url"))
    lines = []
    for path in _email_files(Path(inputs["path"])):
        report = fusion.classify_email(path.read_bytes(), text_model, url_model, tf, fc)
        lines.append(json.dumps({"file": path.name, "report": report.to_dict()}, sort_keys=True))
    out = output_dir / "verdicts.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return RunResult([str(out)], "\n".join(lines))


def _named(spec: str, what: str):
    name, sep, path = spec.partition("=")
    if not sep or not name or not path:
        raise UsageError(f"{what} must look like NAME=PATH, got {spec!r}")
    return name, path


def _read_predictions(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        if "prediction" not in fields:
            raise DataError(f"{path}: expected a 'prediction' column")
        reader.fieldnames = fields
        preds, labels = [], []
        for row, rec in enumerate(reader, 2):
            try:
                preds.append(int(rec["prediction"]))
                labels.append(int(rec["label"]) if rec.get("label") not in (None, "") else None)
            except ValueError as exc:
                raise DataError(f"{path}: {exc}", row=row) from exc
    return preds, labels


def run_eval(cfg, inputs, output_dir: Path) -> RunResult:
    url_models = inputs.get("url_models") or {}
    text_models = inputs.get("text_models") or {}
    pred_files = inputs.get("predictions") or {}
    if not (url_models or text_models or pred_files):
        raise UsageError("give at least one of --url-model, --text-model or --predictions")
    if url_models and text_models:
        raise UsageError("URL and text models need different test sets; evaluate them separately")
    if (url_models or text_models) and not inputs.get("test"):
        raise UsageError("--test is required when evaluating models")

    results = {}
    if url_models:
        records = corpus.read_url_dataset(inputs["test"])
        y = [r.label for r in records]
        for name, directory in url_models.items():
            tf, model = load_url_bundle(directory)
            proba = fusion.url_model_proba(model, tf, [r.url for r in records])
            results[name] = evaluation.evaluate([int(p >= cfg["threshold"]) for p in proba], y)
    if text_models:
        records = corpus.load_email_csv(inputs["test"])
        y = [r.label for r in records]
        for name, directory in text_models.items():
            proba = training.TextModel.load(directory).predict_proba([r.text for r in records])
            results[name] = evaluation.evaluate((proba >= cfg["threshold"]).astype(int), y)
    if pred_files:
        shared = None
        if inputs.get("labels"):
            shared = _read_labels(inputs["labels"])
        for name, path in pred_files.items():
            preds, labels = _read_predictions(path)
            if shared is not None:
                labels = shared
            if any(v is None for v in labels):
                raise DataError(f"{path}: missing labels; add a 'label' column or pass --labels")
            results[name] = evaluation.evaluate(preds, labels)

    table = evaluation.compare_models(results)
    json_path, text_path = output_dir / "comparison.json", output_dir / "comparison.txt"
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(table.to_json() + "\n")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(table.to_text() + "\n")
    return RunResult([str(json_path), str(text_path)], table.to_text())


def _read_labels(path):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        if "label" not in fields:
            raise DataError(f"{path}: expected a 'label' column")
        reader.fieldnames = fields
        labels = []
        for row, rec in enumerate(reader, 2):
            try:
                labels.append(int(rec["label"]))
            except ValueError as exc:
                raise DataError(f"{path}: {exc}", row=row) from exc
    return labels


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    opts: list
    run: Callable


COMMANDS = {
    "prep": Command("prep", "clean, deduplicate and subsample an email or URL CSV", PREP_OPTS, run_prep),
    "train-url": Command("train-url", "fit TF-IDF and a URL classifier", URL_OPTS, run_train_url),
    "train-text": Command("train-text", "train the text encoder", TEXT_OPTS, run_train_text),
    "classify": Command("classify", "classify raw emails", FUSION_OPTS, run_classify),
    "eval": Command("eval", "compare models on a labelled test set", EVAL_OPTS, run_eval),
}


# ------------------------------------------------------------------ parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_opt(parser, opt: Opt):
    kwargs = dict(dest=opt.name, default=argparse.SUPPRESS, help=f"{opt.help} (default: {opt.default})")
    if opt.type is _bool:
        parser.add_argument(opt.flag, action=argparse.BooleanOptionalAction, **kwargs)
        return
    parser.add_argument(opt.flag, type=opt.type, choices=opt.choices, **kwargs)


def _add_globals(parser):
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default: 0)")
    parser.add_argument("--config", default=argparse.SUPPRESS, help="file of key=value option overrides")
    parser.add_argument("--paper-defaults", action="store_true", default=argparse.SUPPRESS,
                        help="pin configurables to the published settings")
    parser.add_argument("--output-dir", default=argparse.SUPPRESS, help="where outputs go (default: .)")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phishdual", description="Dual-path phishing email and URL detection.")
    parser.add_argument("--version", action="version", version=f"phishdual {__version__}")
    _add_globals(parser)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("prep", help=COMMANDS["prep"].help)
    p.add_argument("kind", choices=("emails", "urls"))
    p.add_argument("--input", required=True, help="raw CSV (text,label or url,type)")

    p = sub.add_parser("train-url", help=COMMANDS["train-url"].help)
    p.add_argument("--train", required=True, help="URL CSV (url,type or url,label)")

    p = sub.add_parser("train-text", help=COMMANDS["train-text"].help)
    p.add_argument("--train", required=True, help="email CSV (text,label)")
    p.add_argument("--vocab", default=None, help="existing vocab file (built from the train split otherwise)")

    p = sub.add_parser("classify", help=COMMANDS["classify"].help)
    p.add_argument("path", help="email file or directory of email files")
    p.add_argument("--text-model", default=None, help="text model directory (default: bundled)")
    p.add_argument("--url-model", default=None, help="URL model directory (default: bundled)")

    p = sub.add_parser("eval", help=COMMANDS["eval"].help)
    p.add_argument("--test", default=None, help="labelled test CSV for model evaluation")
    p.add_argument("--url-model", action="append", default=[], metavar="NAME=DIR")
    p.add_argument("--text-model", action="append", default=[], metavar="NAME=DIR")
    p.add_argument("--predictions", action="append", default=[], metavar="NAME=CSV",
                   help="CSV with a prediction column (and label, unless --labels is given)")
    p.add_argument("--labels", default=None, help="CSV with a label column")

    p = sub.add_parser("rerun", help="replay a run from its manifest")
    p.add_argument("manifest")

    for name, command in COMMANDS.items():
        sp = sub.choices[name]
        _add_globals(sp)
        for opt in command.opts:
            _add_opt(sp, opt)
    _add_globals(sub.choices["rerun"])
    return parser


def read_config_file(path, opts) -> dict:
    by_name = {o.name: o for o in opts}
    by_name["seed"] = SEED_OPT
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        if key not in by_name:
            raise UsageError(f"{path}:{lineno}: unknown option {key!r}")
        opt = by_name[key]
        try:
            value = opt.type(raw.strip())
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        if opt.choices and value not in opt.choices:
            raise UsageError(f"{path}:{lineno}: {key} must be one of {opt.choices}")
        values[key] = value
    return values


def resolve_config(command: Command, ns: argparse.Namespace) -> dict:
    opts = command.opts
    cfg = {"seed": SEED_OPT.default}
    cfg.update({o.name: o.default for o in opts})
    if getattr(ns, "paper_defaults", False):
        cfg.update({o.name: o.reference for o in opts if o.reference is not None})
    if getattr(ns, "config", None):
        cfg.update(read_config_file(ns.config, opts))
    explicit = vars(ns)
    for name in list(cfg):
        if name in explicit:
            cfg[name] = explicit[name]
    if command.name == "prep":
        cfg["kind"] = ns.kind
    return cfg


def _validate(command: Command, cfg: dict):
    # Surface bad combinations as usage errors before any data is read.
    try:
        if command.name == "train-text":
            text_train_config(cfg).encoder_config(4)
        elif command.name == "train-url":
            if cfg["model"] == "rf":
                forest.ForestTrainConfig(
                    n_estimators=cfg["n_estimators"], max_depth=cfg["max_depth"],
                    min_samples_leaf=cfg["min_samples_leaf"], max_features=cfg["max_features"],
                )
            else:
                linear.LinearTrainConfig(learning_rate=cfg["lr"], epochs=cfg["epochs"],
                                         l2_lambda=cfg["l2"], batch_size=cfg["batch_size"])
        elif command.name == "classify":
            fusion.FusionConfig(cfg["w_text"], cfg["w_url"], cfg["url_aggregation"], cfg["threshold"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _inputs(command: str, ns) -> dict:
    if command == "prep":
        return {"input": _abs(ns.input)}
    if command == "train-url":
        return {"train": _abs(ns.train)}
    if command == "train-text":
        return {"train": _abs(ns.train), "vocab": _abs(ns.vocab) if ns.vocab else None}
    if command == "classify":
        return {
            "path": _abs(ns.path),
            "text_model": _abs(ns.text_model) if ns.text_model else None,
            "url_model": _abs(ns.url_model) if ns.url_model else None,
        }
    inputs = {"test": _abs(ns.test) if ns.test else None,
              "labels": _abs(ns.labels) if ns.labels else None}
    for key, flag, specs in (("url_models", "--url-model", ns.url_model),
                             ("text_models", "--text-model", ns.text_model),
                             ("predictions", "--predictions", ns.predictions)):
        named = {}
        for spec in specs:
            name, path = _named(spec, flag)
            if name in named:
                raise UsageError(f"duplicate model name {name!r}")
            named[name] = _abs(path)
        inputs[key] = named
    return inputs


def execute(command_name: str, cfg: dict, inputs: dict, output_dir) -> RunResult:
    """Run one command with a fully resolved config and write its manifest."""
    command = COMMANDS[command_name]
    _validate(command, cfg)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = command.run(cfg, inputs, output_dir)
    write_manifest(output_dir, command_name, cfg, inputs, result.outputs, time.perf_counter() - start)
    return result


def load_manifest(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    if manifest.get("format_version") != MANIFEST_VERSION or manifest.get("command") not in COMMANDS:
        raise ModelFormatError(f"{path}: not a supported run manifest")
    return manifest


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if ns.command is None:
        build_parser().print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if ns.command == "rerun":
            manifest = load_manifest(ns.manifest)
            name, cfg, inputs = manifest["command"], manifest["config"], manifest["inputs"]
            out_dir = getattr(ns, "output_dir", None) or str(Path(ns.manifest).resolve().parent)
        else:
            name = ns.command
            cfg = resolve_config(COMMANDS[name], ns)
            inputs = _inputs(name, ns)
            out_dir = getattr(ns, "output_dir", ".")
        result = execute(name, cfg, inputs, out_dir)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ModelFormatError, OSError, UnicodeDecodeError, json.JSONDecodeError, csv.Error) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if result.stdout:
        print(result.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
