import csv

import numpy as np
import pytest

from vtdetect.corpus import Corpus, Document, LabelTable

SAMPLE_ROWS = [
    ("denial of normal the con be asked to comment on tragedies an emotional retard", "1"),
    ("just by being able to tweet this insufferable bullshit proves trump a nazi you vagina", "1"),
    ("king eric canton at manchester united eric canton is one of the best foot ball players "
     "of all time he scored total goals", "0"),
]

_ACCEPTANCE = []


def corpus_of(pairs, names=("0", "1")):
    docs = [Document(tuple(t.split()) if isinstance(t, str) else tuple(t), y, str(i))
            for i, (t, y) in enumerate(pairs)]
    return Corpus(docs, LabelTable(tuple(names)))


def separable_corpus(n_per_class=100, vocab=20, length=8, seed=0):
    """Two classes drawing tokens from disjoint vocabularies."""
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(2 * n_per_class):
        label = i % 2
        toks = [f"c{label}w{j}" for j in rng.integers(0, vocab, size=length)]
        pairs.append((toks, label))
    return corpus_of(pairs)


VIOLENT_WORDS = ["kill", "hate", "idiot", "die", "stupid", "trash", "filthy", "nazi", "scum", "destroy"]
BENIGN_WORDS = ["love", "great", "happy", "friend", "game", "music", "sunny", "thanks", "goal", "team"]
SHARED_WORDS = ["you", "are", "a", "the", "this", "so", "is", "all", "today", "people"]


def write_dataset(path, n=200, seed=0):
    """CSV with Content, Label and Content_int columns holding synthetic texts."""
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["Content", "Label", "Content_int"])
        for i in range(n):
            label = i % 2
            own = VIOLENT_WORDS if label else BENIGN_WORDS
            words = [own[j] if rng.random() < 0.5 else SHARED_WORDS[j] for j in rng.integers(0, 10, size=9)]
            w.writerow([" ".join(words), str(label), "[]"])
    return path


@pytest.fixture
def dataset(tmp_path):
    return write_dataset(tmp_path / "data.csv")


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion.

    ``ok=None`` records a skip and skips the calling test.
    """

    def record(number, name, ok, detail=""):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        _ACCEPTANCE.append((str(number), name, status, detail))
        if ok is None:
            pytest.skip(f"criterion {number} ({name}): {detail}")
        assert ok, f"criterion {number} ({name}) failed: {detail}"

    return record


def _criterion_key(row):
    digits = "".join(ch for ch in row[0] if ch.isdigit())
    return int(digits), row[0]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, status, detail in sorted(_ACCEPTANCE, key=_criterion_key):
        terminalreporter.write_line(f"[{status}] {number}: {name}" + (f" ({detail})" if detail else ""))
