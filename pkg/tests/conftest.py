from __future__ import annotations

import os

import pytest

import corpus_synth

DATASET_ENV = "PIG_DATASET_DIR"

# one line per acceptance criterion, echoed after the test run so the
# verdicts are visible even when pytest captures stdout
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


def real_dataset_dir() -> str | None:
    path = os.environ.get(DATASET_ENV, "").strip()
    return path or None


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Full-size dataset: the real corpus when configured, else the stand-in."""
    real = real_dataset_dir()
    if real is not None:
        return real
    return str(corpus_synth.write_corpus(tmp_path_factory.mktemp("corpus-full"), 150))


@pytest.fixture(scope="session")
def corpus_is_real() -> bool:
    return real_dataset_dir() is not None


@pytest.fixture(scope="session")
def small_corpus_dir(tmp_path_factory):
    """12 scores, enough for harness plumbing tests."""
    return str(corpus_synth.write_corpus(tmp_path_factory.mktemp("corpus-small"), 12))


@pytest.fixture(scope="session")
def sub_corpus_dir(tmp_path_factory):
    """30 scores for the training benchmark."""
    return str(corpus_synth.write_corpus(tmp_path_factory.mktemp("corpus-sub"), 30))
