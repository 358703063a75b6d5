"""Term/class association statistics for feature selection.

All statistics work on a 2x2 document contingency table for a term ``t``
and a class ``c``:

    ``A``  documents of class c containing t
    ``B``  documents of other classes containing t
    ``C``  documents of class c without t
    ``D``  documents of other classes without t

Logarithms are natural. A term counts once per document.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .errors import ConfigError

METHODS = ("DF", "MI_prob", "MI_counts", "IG", "CHI2")
_ALIASES = {m.lower(): m for m in METHODS} | {"mi": "MI_prob", "chi": "CHI2", "chi_square": "CHI2"}


@dataclass(frozen=True)
class ContingencyTable:
    A: float
    B: float
    C: float
    D: float

    def __post_init__(self):
        if min(self.A, self.B, self.C, self.D) < 0:
            raise ValueError(f"negative count in {self}")

    @property
    def N(self):
        return self.A + self.B + self.C + self.D

    def smoothed(self, delta=0.5) -> "ContingencyTable":
        return ContingencyTable(self.A + delta, self.B + delta, self.C + delta, self.D + delta)


@dataclass(frozen=True)
class TermScore:
    term: str
    score: float
    method: str
    df: int


def term_class_counts(corpus: Corpus) -> dict[str, np.ndarray]:
    """Per-term document counts, one entry per class."""
    k = len(corpus.labels)
    counts: dict[str, np.ndarray] = defaultdict(lambda: np.zeros(k, dtype=np.int64))
    for doc in corpus:
        for term in set(doc.tokens):
            counts[term][doc.label] += 1
    return dict(counts)


def _table(per_class: np.ndarray, class_sizes: np.ndarray, label: int) -> ContingencyTable:
    n = int(class_sizes.sum())
    a = int(per_class[label])
    df = int(per_class.sum())
    n_c = int(class_sizes[label])
    b = df - a
    return ContingencyTable(a, b, n_c - a, n - n_c - b)


def build_contingency(corpus: Corpus, term: str, label: int) -> ContingencyTable:
    if not 0 <= label < len(corpus.labels):
        raise ConfigError(f"label {label} not in corpus label set")
    per_class = np.zeros(len(corpus.labels), dtype=np.int64)
    for doc in corpus:
        if term in doc.tokens:
            per_class[doc.label] += 1
    return _table(per_class, corpus.label_counts(), label)


def document_frequency(corpus: Corpus, term: str) -> int:
    return sum(1 for doc in corpus if term in doc.tokens)


def mutual_information(table: ContingencyTable, form: str = "probability") -> float:
    """Pointwise mutual information between a term and a class.

    ``form="probability"`` evaluates ``log(p(t,c) / (p(t) p(c)))``.
    ``form="counts"`` evaluates ``log(A*D / ((A+B)(A+C)))`` literally; note
    that the usual count approximation has ``A*N`` in the numerator, which
    equals the probability form.

    When a logarithm argument would be zero (``A``, ``A+B`` or ``A+C`` is
    zero, or ``D`` for the counts form), 0.5 is added to every cell first.
    """
    t = table
    if form == "probability":
        if t.A == 0 or t.A + t.B == 0 or t.A + t.C == 0:
            t = t.smoothed()
        n = t.N
        return math.log((t.A / n) / (((t.A + t.B) / n) * ((t.A + t.C) / n)))
    if form == "counts":
        if t.A == 0 or t.A + t.B == 0 or t.A + t.C == 0 or t.D == 0:
            t = t.smoothed()
        return math.log((t.A * t.D) / ((t.A + t.B) * (t.A + t.C)))
    raise ConfigError(f"unknown MI form {form!r}")


def _plogp_sum(probs) -> float:
    return sum(p * math.log(p) for p in probs if p > 0)


def information_gain(tables: Sequence[ContingencyTable]) -> float:
    """Information gain of a term given one contingency table per class.

    Computed as ``sum P(c) log P(c) + P(t) sum P(c|t) log P(c|t)
    + P(~t) sum P(c|~t) log P(c|~t)`` with ``0 log 0 = 0``. The first term
    does not depend on the term, so rankings agree with the textbook
    ``H(C) - H(C|T)``; the value itself is offset by ``-2 H(C)``.
    """
    if not tables:
        raise ValueError("need one table per class")
    n = tables[0].N
    if any(tb.N != n for tb in tables):
        raise ValueError("tables disagree on N")
    df = tables[0].A + tables[0].B
    p_c = [(tb.A + tb.C) / n for tb in tables]
    p_t = df / n
    score = _plogp_sum(p_c)
    if df > 0:
        score += p_t * _plogp_sum(tb.A / df for tb in tables)
    if n - df > 0:
        score += (1 - p_t) * _plogp_sum(tb.C / (n - df) for tb in tables)
    return score


def chi_square(table: ContingencyTable) -> float:
    """``N (AD - CB)^2 / ((A+C)(B+D)(A+B)(C+D))``; 0 if any marginal is 0."""
    a, b, c, d = table.A, table.B, table.C, table.D
    denom = (a + c) * (b + d) * (a + b) * (c + d)
    if denom == 0:
        return 0.0
    return table.N * (a * d - c * b) ** 2 / denom


def _normalize_method(method: str) -> str:
    try:
        return _ALIASES[method.lower()]
    except KeyError:
        raise ConfigError(f"unknown feature-selection method {method!r}; choose from {METHODS}") from None


def rank(scores: Sequence[TermScore], k: int | None = None) -> list[TermScore]:
    """Descending score, ties broken by term."""
    ordered = sorted(scores, key=lambda s: (-s.score, s.term))
    return ordered if k is None else ordered[:k]


def score_terms(corpus: Corpus, method: str, min_df: int = 1, label: int | None = None):
    """Score every term with document frequency >= ``min_df``.

    For the class-specific methods (MI, CHI2) the score is that of
    ``label``, or the maximum over classes when ``label`` is None.
    """
    method = _normalize_method(method)
    counts = term_class_counts(corpus)
    sizes = corpus.label_counts()
    classes = range(len(sizes)) if label is None else [label]
    out = []
    for term, per_class in counts.items():
        df = int(per_class.sum())
        if df < min_df:
            continue
        if method == "DF":
            score = float(df)
        elif method == "IG":
            score = information_gain([_table(per_class, sizes, c) for c in range(len(sizes))])
        else:
            if method == "CHI2":
                fn = chi_square
            else:
                form = "probability" if method == "MI_prob" else "counts"
                fn = lambda tb, form=form: mutual_information(tb, form)  # noqa: E731
            score = max(fn(_table(per_class, sizes, c)) for c in classes)
        out.append(TermScore(term, score, method, df))
    return out


def select_features(corpus: Corpus, method: str, k: int, min_df: int = 1, label=None):
    """Top-``k`` terms under ``method``; fewer if there are fewer candidates."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return rank(score_terms(corpus, method, min_df, label), k)


def write_scores_csv(scores: Sequence[TermScore], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["term", "score", "method", "df"])
    for s in scores:
        writer.writerow([s.term, repr(s.score), s.method, s.df])
