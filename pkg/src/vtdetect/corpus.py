"""Dataset ingestion and text preprocessing.

The input is a CSV file with a header row; by default the text lives in a
``Content`` column and the class in a ``Label`` column (0 = benign,
1 = violent for the HateSpeechDataset). Any other columns, including the
pre-encoded ``Content_int``, are ignored.

Emoticon stripping removes every codepoint in :data:`EMOJI_RANGES`
(inclusive bounds), replacing each with a space.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import unicodedata
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

DEFAULT_SCHEMA = {"content": "Content", "label": "Label"}

EMOJI_RANGES = (
    (0x1F1E6, 0x1F1FF),  # regional indicator symbols (flags)
    (0x1F300, 0x1F5FF),  # miscellaneous symbols and pictographs
    (0x1F600, 0x1F64F),  # emoticons
    (0x1F680, 0x1F6FF),  # transport and map symbols
    (0x1F700, 0x1F77F),  # alchemical symbols
    (0x1F780, 0x1F7FF),  # geometric shapes extended
    (0x1F800, 0x1F8FF),  # supplemental arrows-C
    (0x1F900, 0x1F9FF),  # supplemental symbols and pictographs
    (0x1FA00, 0x1FA6F),  # chess symbols
    (0x1FA70, 0x1FAFF),  # symbols and pictographs extended-A
    (0x2600, 0x26FF),  # miscellaneous symbols
    (0x2700, 0x27BF),  # dingbats
    (0xFE00, 0xFE0F),  # variation selectors
    (0x200D, 0x200D),  # zero width joiner
    (0x20E3, 0x20E3),  # combining enclosing keycap
)

_EMOJI_RE = re.compile(
    "[" + "".join(f"{chr(lo)}-{chr(hi)}" if lo != hi else chr(lo) for lo, hi in EMOJI_RANGES) + "]"
)
# word runs (with inner apostrophes) or runs of punctuation, detached
_TOKEN_RE = re.compile(r"\w+(?:['’]\w+)*|[^\w\s]+")


@dataclass(frozen=True)
class RawRecord:
    content: str
    label: str
    row_index: int


@dataclass(frozen=True)
class PreprocessConfig:
    stopwords: frozenset = frozenset()
    lowercase: bool = True
    strip_emoticons: bool = True

    def to_dict(self) -> dict:
        return {
            "stopwords": sorted(self.stopwords),
            "lowercase": self.lowercase,
            "strip_emoticons": self.strip_emoticons,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PreprocessConfig":
        return cls(
            stopwords=frozenset(d.get("stopwords", ())),
            lowercase=bool(d.get("lowercase", True)),
            strip_emoticons=bool(d.get("strip_emoticons", True)),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class LabelTable:
    """Dense label ids ``0..K-1`` and their display names."""

    names: tuple

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise DataError(f"duplicate label names: {self.names}")

    def __len__(self):
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown label {name!r}") from None

    def name_of(self, label_id: int) -> str:
        return self.names[label_id]


@dataclass(frozen=True)
class Document:
    tokens: tuple
    label: int
    doc_id: str


@dataclass
class Corpus:
    documents: list
    labels: LabelTable
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        k = len(self.labels)
        for doc in self.documents:
            if not 0 <= doc.label < k:
                raise DataError(f"document {doc.doc_id!r} has label {doc.label} outside 0..{k - 1}")

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]

    @property
    def label_ids(self) -> np.ndarray:
        return np.array([d.label for d in self.documents], dtype=np.int64)

    def label_counts(self) -> np.ndarray:
        return np.bincount(self.label_ids, minlength=len(self.labels))

    def subset(self, indices: Iterable[int]) -> "Corpus":
        return Corpus([self.documents[i] for i in indices], self.labels, dict(self.provenance))

    def with_documents(self, documents: Sequence[Document]) -> "Corpus":
        return Corpus(list(documents), self.labels, dict(self.provenance))


def load_stopwords(path) -> frozenset:
    """Read a UTF-8 stopword file, one token per line; blank lines are skipped."""
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def load_dataset(path, schema: Mapping[str, str] | None = None) -> list[RawRecord]:
    """Read labelled rows from a CSV file with a header.

    Parameters
    ----------
    path : str or Path
        CSV file; standard quoting rules apply.
    schema : mapping, optional
        ``{"content": column, "label": column}``; defaults to
        ``Content`` / ``Label``.

    Returns
    -------
    list of RawRecord
        One record per data row, in file order. ``row_index`` counts data
        rows from 0 (the header is not counted).
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file (no header)") from None
        cols = {}
        for key in ("content", "label"):
            try:
                cols[key] = header.index(schema[key])
            except ValueError:
                raise DataError(f"{path}: missing column {schema[key]!r}") from None
        records = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} fields, expected {len(header)}"
                )
            records.append(RawRecord(row[cols["content"]], row[cols["label"]].strip(), i))
    if not records:
        raise DataError(f"{path}: no data rows")
    return records


def preprocess(raw: str, config: PreprocessConfig = PreprocessConfig()) -> tuple:
    """Normalise and tokenise one document.

    NFKC normalisation, optional lowercasing and emoji removal, then a split
    into word runs and detached punctuation runs. Stopwords are dropped
    after lowercasing.
    """
    text = unicodedata.normalize("NFKC", raw)
    if config.lowercase:
        text = text.lower()
    if config.strip_emoticons:
        text = _EMOJI_RE.sub(" ", text)
    stop = config.stopwords
    return tuple(t for t in _TOKEN_RE.findall(text) if t not in stop)


def parse_labels(records: Sequence[RawRecord], expected=None) -> tuple[LabelTable, list[int]]:
    """Map record labels onto dense ids.

    Without ``expected``, every label must be an integer; ids follow
    ascending integer order. With ``expected`` (a sequence of names or
    integers), label ``i`` is ``expected[i]``. When the declared names are
    not themselves integers, an integer label ``i`` is read as id ``i``.
    Anything else is rejected with the offending row index.
    """
    if expected is not None:
        names = tuple(str(e) for e in expected)
        table = LabelTable(names)
        ids = []
        for rec in records:
            if rec.label in names:
                ids.append(names.index(rec.label))
                continue
            try:
                as_int = int(rec.label)
            except ValueError:
                as_int = -1
            if 0 <= as_int < len(names) and not any(n.lstrip("-").isdigit() for n in names):
                ids.append(as_int)
                continue
            raise DataError(
                f"row {rec.row_index}: label {rec.label!r} not in expected set {list(names)}"
            )
    else:
        values = []
        for rec in records:
            try:
                values.append(int(rec.label))
            except ValueError:
                raise DataError(f"row {rec.row_index}: unparseable label {rec.label!r}") from None
        distinct = sorted(set(values))
        table = LabelTable(tuple(str(v) for v in distinct))
        index = {v: i for i, v in enumerate(distinct)}
        ids = [index[v] for v in values]
    if len(set(ids)) < 2:
        raise DataError("need >= 2 labels for supervised training")
    return table, ids


def make_corpus(records, config=PreprocessConfig(), expected=None, source="") -> Corpus:
    table, ids = parse_labels(records, expected)
    docs = [
        Document(preprocess(rec.content, config), label, str(rec.row_index))
        for rec, label in zip(records, ids)
    ]
    if not docs:
        raise DataError("no documents")
    return Corpus(docs, table, {"source": str(source), "preprocess_digest": config.digest()})


def read_corpus(path, config=PreprocessConfig(), schema=None, expected=None) -> Corpus:
    """Convenience wrapper: load, label and preprocess a CSV dataset."""
    return make_corpus(load_dataset(path, schema), config, expected, source=path)


def _round_half_up(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def split(corpus: Corpus, test_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified train/test split.

    Each label contributes ``round(test_fraction * n_label)`` documents to
    the test side (round half up). Documents keep their original relative
    order on both sides.
    """
    if not 0 < test_fraction < 1:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    labels = corpus.label_ids
    test_idx = []
    for label in range(len(corpus.labels)):
        members = np.flatnonzero(labels == label)
        n_test = _round_half_up(test_fraction * len(members))
        if n_test:
            test_idx.extend(rng.permutation(members)[:n_test].tolist())
    test_set = set(test_idx)
    train_idx = [i for i in range(len(corpus)) if i not in test_set]
    if not test_set or not train_idx:
        raise DataError(
            f"test_fraction {test_fraction} on {len(corpus)} documents leaves an empty split"
        )
    return corpus.subset(train_idx), corpus.subset(sorted(test_set))
