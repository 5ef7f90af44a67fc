"""Rebuild the bundled fixture models under src/phishdual/data/models/.

    python scripts/build_fixture_models.py

url/  TF-IDF + random forest trained on the mini URL corpus (published settings, seed 0)
text/ encoder trained from scratch on all 64 toy emails (200 epochs, seed 0)

Manifests are not written so the package carries no machine-specific paths.
"""

from pathlib import Path

from phishdual import cli

DATA = Path(__file__).resolve().parents[1] / "src" / "phishdual" / "data"
RUNS = {
    "url": ["--paper-defaults", "train-url", "--train", str(DATA / "mini_urls.csv")],
    "text": ["train-text", "--train", str(DATA / "toy_emails.csv"), "--epochs", "200", "--split-ratio", "1.0"],
}
KEEP = {"url": ("tfidf.json", "url_model.json"), "text": ("vocab.txt", "params.json")}


def build(kind):
    out = DATA / "models" / kind
    out.mkdir(parents=True, exist_ok=True)
    ns = cli.build_parser().parse_args(["--seed", "0"] + RUNS[kind])
    command = cli.COMMANDS[ns.command]
    cfg = cli.resolve_config(command, ns)
    result = command.run(cfg, cli._inputs(ns.command, ns), out)
    for path in map(Path, result.outputs):
        if path.name not in KEEP[kind]:
            path.unlink()
    print(f"{kind}: {', '.join(KEEP[kind])} -> {out}")


if __name__ == "__main__":
    for kind in RUNS:
        build(kind)
