"""N-gram language models and LM-constrained rule matching.

A rule is a sequence of slots; each slot is either a keyword set (the
token must belong to it) or a wildcard that swallows up to ``max_span``
arbitrary tokens. Rule hits are then filtered by comparing how likely the
matched span is under a model of violent text and under a model of
benign text.

Sentences are padded with ``n - 1`` begin markers and one end marker.
Tokens seen fewer than ``min_count`` times in training map to UNK. The
predictable outcomes are the vocabulary words, UNK and the end marker;
add-k smoothing uses that count as ``|V|``.
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import container
from .container import Reader, Writer
from .corpus import Corpus
from .errors import ConfigError, DataError, ModelFormatError, ZeroProbabilityError

BOS = -1
MAX_ORDER = 4


class NGramModel:
    """Counts for orders ``1..n`` over padded, UNK-mapped sentences.

    ``counts[m]`` maps a context tuple of length ``m - 1`` to a Counter of
    following word ids. Only the order-``n`` table is used for scoring.
    """

    def __init__(self, order, k, min_count, words, counts, total_tokens):
        self.order = order
        self.k = k
        self.min_count = min_count
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.unk = len(self.words)
        self.eos = len(self.words) + 1
        self.counts = counts
        self.total_tokens = total_tokens
        top = counts[order]
        self._context_totals = {h: sum(c.values()) for h, c in top.items()}

    @property
    def vocab_size(self) -> int:
        """Number of predictable outcomes: words, UNK and end-of-sentence."""
        return len(self.words) + 2

    def encode(self, tokens: Sequence[str]) -> list[int]:
        get = self.index.get
        return [get(t, self.unk) for t in tokens]

    def padded(self, tokens: Sequence[str]) -> list[int]:
        return [BOS] * (self.order - 1) + self.encode(tokens) + [self.eos]

    def prob(self, word: int, context: tuple) -> float:
        """Smoothed ``P(word | context)`` with ``len(context) == order - 1``."""
        c_hw = self.counts[self.order].get(context, {}).get(word, 0)
        c_h = self._context_totals.get(context, 0)
        denom = c_h + self.k * self.vocab_size
        if c_hw + self.k == 0 or denom == 0:
            raise ZeroProbabilityError(f"zero probability for word {word} after context {context}")
        return (c_hw + self.k) / denom

    def digest(self) -> str:
        return hashlib.sha256(_write_lm(self)).hexdigest()


def train_lm(corpus: Corpus | Sequence[Sequence[str]], n: int = 2, k: float = 0.1, min_count: int = 1) -> NGramModel:
    """Count n-grams over ``corpus`` (a Corpus or plain token sequences)."""
    if n < 2:
        raise ConfigError(f"n-gram order must be >= 2 (a unigram model ignores context), got {n}")
    if n > MAX_ORDER:
        raise ConfigError(f"n-gram order must be <= {MAX_ORDER}, got {n}")
    if k < 0:
        raise ConfigError(f"smoothing constant must be >= 0, got {k}")
    sentences = [d.tokens for d in corpus] if isinstance(corpus, Corpus) else [tuple(s) for s in corpus]
    if not sentences:
        raise DataError("empty corpus")
    freq = Counter()
    for s in sentences:
        freq.update(s)
    words = sorted(w for w, c in freq.items() if c >= min_count)
    model = NGramModel(n, k, min_count, words, {m: {} for m in range(1, n + 1)}, 0)
    counts = {m: defaultdict(Counter) for m in range(1, n + 1)}
    total = 0
    for s in sentences:
        seq = model.padded(s)
        total += len(s)
        for i in range(n - 1, len(seq)):
            for m in range(1, n + 1):
                counts[m][tuple(seq[i - m + 1:i])][seq[i]] += 1
    frozen = {m: {h: Counter(c) for h, c in counts[m].items()} for m in counts}
    return NGramModel(n, k, min_count, words, frozen, total)


def sentence_logprob(model: NGramModel, sentence: Sequence[str]) -> float:
    """Natural-log probability of a padded sentence."""
    seq = model.padded(sentence)
    n = model.order
    total = 0.0
    for i in range(n - 1, len(seq)):
        total += math.log(model.prob(seq[i], tuple(seq[i - n + 1:i])))
    return total


# -- rules -------------------------------------------------------------------

@dataclass(frozen=True)
class Slot:
    keywords: frozenset | None = None
    max_span: int = 0

    @property
    def is_wildcard(self) -> bool:
        return self.keywords is None


@dataclass(frozen=True)
class Rule:
    id: str
    slots: tuple

    def __post_init__(self):
        if not self.slots:
            raise ConfigError(f"rule {self.id!r} has no slots")
        if all(s.is_wildcard for s in self.slots):
            raise ConfigError(f"rule {self.id!r} needs at least one keyword slot")


@dataclass(frozen=True)
class RuleMatch:
    rule_id: str
    doc_index: int
    start: int
    end: int
    tokens: tuple


def parse_slot(text: str) -> Slot:
    kind, _, body = text.strip().partition(":")
    if kind == "kw":
        terms = frozenset(t for t in body.split("|") if t)
        if not terms:
            raise ConfigError(f"empty keyword slot {text!r}")
        return Slot(terms)
    if kind == "any":
        try:
            span = int(body)
        except ValueError:
            raise ConfigError(f"bad wildcard span in {text!r}") from None
        if span < 0:
            raise ConfigError(f"negative wildcard span in {text!r}")
        return Slot(None, span)
    raise ConfigError(f"unknown slot kind in {text!r}")


def parse_rules(text: str) -> list[Rule]:
    """Parse ``rule_id<TAB>slot;slot;...`` lines; ``#`` starts a comment line."""
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        rule_id, sep, body = line.partition("\t")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'rule_id<TAB>slots'")
        try:
            rules.append(Rule(rule_id, tuple(parse_slot(s) for s in body.split(";") if s.strip())))
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return rules


def load_rules(path) -> list[Rule]:
    return parse_rules(Path(path).read_text(encoding="utf-8"))


def _longest_end(slots, tokens, start) -> int | None:
    best = None

    def walk(i, pos):
        nonlocal best
        if i == len(slots):
            if best is None or pos > best:
                best = pos
            return
        slot = slots[i]
        if slot.is_wildcard:
            for span in range(min(slot.max_span, len(tokens) - pos), -1, -1):
                walk(i + 1, pos + span)
        elif pos < len(tokens) and tokens[pos] in slot.keywords:
            walk(i + 1, pos + 1)

    walk(0, start)
    return best


def match_rules(rules: Sequence[Rule], doc: Sequence[str], doc_index: int = 0) -> list[RuleMatch]:
    """Leftmost-longest, non-overlapping matches of each rule (rules in id order)."""
    tokens = tuple(doc)
    out = []
    for rule in sorted(rules, key=lambda r: r.id):
        pos = 0
        while pos < len(tokens):
            end = _longest_end(rule.slots, tokens, pos)
            if end is not None and end > pos:
                out.append(RuleMatch(rule.id, doc_index, pos, end, tokens[pos:end]))
                pos = end
            else:
                pos += 1
    return out


def match_score(match: RuleMatch, violent_lm: NGramModel, benign_lm: NGramModel) -> float:
    """Per-token log-likelihood ratio of the matched span, violent vs benign."""
    diff = sentence_logprob(violent_lm, match.tokens) - sentence_logprob(benign_lm, match.tokens)
    return diff / len(match.tokens)


def constrain_with_lm(matches, violent_lm: NGramModel, benign_lm: NGramModel, threshold: float):
    """Keep the matches whose :func:`match_score` is at least ``threshold``."""
    if violent_lm.order != benign_lm.order or violent_lm.k != benign_lm.k:
        raise ConfigError("violent and benign language models must share order and smoothing")
    if threshold == -math.inf:
        return list(matches)
    return [m for m in matches if match_score(m, violent_lm, benign_lm) >= threshold]


# -- serialization ------------------------------------------------------------

def _write_lm(model: NGramModel) -> bytes:
    w = Writer()
    w.u32(model.order)
    w.f64(model.k)
    w.u32(model.min_count)
    w.u64(model.total_tokens)
    w.u64(len(model.words))
    for word in model.words:
        w.text(word)
    for m in range(1, model.order + 1):
        table = model.counts[m]
        w.u64(len(table))
        for h in sorted(table):
            for tok in h:
                w.i64(tok)
            row = table[h]
            w.u32(len(row))
            for word in sorted(row):
                w.i64(word)
                w.u64(row[word])
    return w.getvalue()


def _read_lm(payload: bytes) -> NGramModel:
    r = Reader(payload, "language model section")
    order, k, min_count, total = r.u32(), r.f64(), r.u32(), r.u64()
    if not 2 <= order <= MAX_ORDER:
        raise ModelFormatError(f"language model order {order} out of range")
    words = [r.text() for _ in range(r.u64())]
    counts = {}
    for m in range(1, order + 1):
        table = {}
        for _ in range(r.u64()):
            h = tuple(r.i64() for _ in range(m - 1))
            table[h] = Counter({r.i64(): r.u64() for _ in range(r.u32())})
        counts[m] = table
    r.expect_end()
    return NGramModel(order, k, min_count, words, counts, total)


def save_lm(model: NGramModel) -> bytes:
    return container.pack({b"NGLM": _write_lm(model)})


def load_lm(data: bytes) -> NGramModel:
    sections = container.unpack(data)
    if b"NGLM" not in sections:
        raise ModelFormatError("container has no language-model section")
    return _read_lm(sections[b"NGLM"])
