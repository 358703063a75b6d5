"""Keyword extraction by the chi2-FPN score.

A term's score for a class is the product of four factors:

* ``chi2``: chi-square association with the class (see :mod:`.features`);
* ``fre``:  the term's share of all occurrences of terms with the same
  part-of-speech tag;
* ``nom``:  a configurable weight for the term's part-of-speech tag;
* ``pos``:  a position weight, averaged over the documents that contain
  the term (``in_weight`` if any occurrence falls in the leading
  ``fraction`` of the document, ``out_weight`` otherwise).

Tags come from a plain lexicon file; there is no built-in tagger.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .corpus import Corpus
from .errors import ConfigError, DataError
from .features import TermScore, _table, build_contingency, chi_square, rank, term_class_counts

TAGS = ("noun", "verb", "adjective", "adverb", "other")
DEFAULT_WEIGHTS = {"noun": 1.0, "verb": 0.8, "adjective": 0.6, "adverb": 0.5, "other": 0.3}


@dataclass(frozen=True)
class PosLexicon:
    tags: Mapping[str, str] = field(default_factory=dict)
    weights: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))

    def __post_init__(self):
        for tag, w in self.weights.items():
            if tag not in TAGS:
                raise ConfigError(f"unknown POS tag {tag!r}")
            if not 0 < w <= 1:
                raise ConfigError(f"POS weight for {tag!r} must lie in (0, 1], got {w}")
        missing = set(TAGS) - set(self.weights)
        if missing:
            raise ConfigError(f"POS weight table lacks {sorted(missing)}")
        for token, tag in self.tags.items():
            if tag not in TAGS:
                raise ConfigError(f"token {token!r} has unknown tag {tag!r}")

    def tag(self, token: str) -> str:
        return self.tags.get(token, "other")

    def weight(self, token: str) -> float:
        return self.weights[self.tag(token)]

    @classmethod
    def load(cls, path, weights: Mapping[str, float] | None = None) -> "PosLexicon":
        """Read ``token<TAB>tag`` lines."""
        tags = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'token<TAB>tag'")
            tags[parts[0]] = parts[1].strip()
        return cls(tags, dict(weights or DEFAULT_WEIGHTS))


@dataclass(frozen=True)
class PositionRule:
    fraction: float = 0.25
    in_weight: float = 1.0
    out_weight: float = 0.5


@dataclass(frozen=True)
class KeywordScore:
    term: str
    chi2: float
    fre: float
    nom: float
    pos: float
    product: float

    @classmethod
    def of(cls, term, chi2, fre, nom, pos):
        return cls(term, chi2, fre, nom, pos, chi2 * fre * nom * pos)


class _CorpusStats:
    """Single-pass term statistics shared by every per-term factor."""

    def __init__(self, corpus: Corpus, lexicon: PosLexicon, rule: PositionRule):
        if len(corpus) == 0:
            raise DataError("empty corpus")
        self.freq = Counter()
        self.docs_with = Counter()
        self.early = Counter()
        for doc in corpus:
            self.freq.update(doc.tokens)
            cut = math.ceil(rule.fraction * len(doc.tokens))
            lead = set(doc.tokens[:cut])
            for term in set(doc.tokens):
                self.docs_with[term] += 1
                if term in lead:
                    self.early[term] += 1
        self.tag_totals = Counter()
        for term, f in self.freq.items():
            self.tag_totals[lexicon.tag(term)] += f
        self.lexicon = lexicon
        self.rule = rule

    def fre(self, term):
        f = self.freq.get(term, 0)
        return f / self.tag_totals[self.lexicon.tag(term)] if f else 0.0

    def pos(self, term):
        n = self.docs_with.get(term, 0)
        if not n:
            return 0.0
        e = self.early[term]
        return (e * self.rule.in_weight + (n - e) * self.rule.out_weight) / n


def fre(term: str, corpus: Corpus, lexicon: PosLexicon) -> float:
    return _CorpusStats(corpus, lexicon, PositionRule()).fre(term)


def nom(term: str, lexicon: PosLexicon) -> float:
    return lexicon.weight(term)


def pos_feature(term: str, corpus: Corpus, rule: PositionRule = PositionRule()) -> float:
    return _CorpusStats(corpus, PosLexicon(), rule).pos(term)


def chi2_fpn(term, label, corpus, lexicon, rule: PositionRule = PositionRule()) -> KeywordScore:
    stats = _CorpusStats(corpus, lexicon, rule)
    chi2 = chi_square(build_contingency(corpus, term, label))
    return KeywordScore.of(term, chi2, stats.fre(term), lexicon.weight(term), stats.pos(term))


def score_keywords(corpus, label, lexicon=PosLexicon(), rule=PositionRule()) -> list[KeywordScore]:
    if not 0 <= label < len(corpus.labels):
        raise ConfigError(f"label {label} not in corpus label set")
    stats = _CorpusStats(corpus, lexicon, rule)
    sizes = corpus.label_counts()
    out = []
    for term, per_class in term_class_counts(corpus).items():
        chi2 = chi_square(_table(per_class, sizes, label))
        out.append(KeywordScore.of(term, chi2, stats.fre(term), lexicon.weight(term), stats.pos(term)))
    return out


def extract_keywords(corpus, label, k, lexicon=PosLexicon(), rule=PositionRule()) -> list[KeywordScore]:
    """Top-``k`` terms by chi2-FPN product for ``label``, ties by term."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    return rank_keywords(score_keywords(corpus, label, lexicon, rule), k)


def rank_keywords(scores, k=None) -> list[KeywordScore]:
    by_term = {s.term: s for s in scores}
    ranked = rank([TermScore(s.term, s.product, "CHI2_FPN", 0) for s in scores], k)
    return [by_term[s.term] for s in ranked]


def write_keywords_csv(scores, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["term", "chi2", "fre", "nom", "pos", "product"])
    for s in scores:
        writer.writerow([s.term, repr(s.chi2), repr(s.fre), repr(s.nom), repr(s.pos), repr(s.product)])
