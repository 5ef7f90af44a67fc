from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "phishdual" / "data"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def write_text(path, text):
    path.write_text(text, encoding="utf-8", newline="")
    return path


@pytest.fixture(scope="session")
def bundled_models():
    """``(text_model, tfidf, url_model)`` shipped inside the package."""
    from phishdual.cli import bundled_model_dir, load_url_bundle
    from phishdual.textmodel import TextModel

    tf, url_model = load_url_bundle(bundled_model_dir("url"))
    return TextModel.load(bundled_model_dir("text")), tf, url_model


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
