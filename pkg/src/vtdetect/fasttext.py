"""Supervised bag-of-n-grams classifier with a hierarchical-softmax output.

A document is represented by the mean of the embedding rows of its
in-vocabulary words and of its hashed word n-grams; that mean feeds the
label tree of :mod:`.hsoftmax` directly (the hidden layer is linear).
Training is plain SGD on the per-document log-likelihood with a learning
rate that decays linearly to zero.

Word n-grams are hashed with 64-bit FNV-1a over the ASCII decimal word ids
joined by single spaces (``b"12 7"``) and land in row
``V + hash % buckets``. N-grams containing an out-of-vocabulary word are
skipped.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import container
from ._rng import substream
from .container import Reader, Writer
from .corpus import Corpus, LabelTable, PreprocessConfig
from .errors import ConfigError, DataError, DivergenceError, ModelFormatError
from .hsoftmax import HuffmanTree, build_huffman, mean_rows

log = logging.getLogger(__name__)

UNK_ID = -1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Hyperparameters:
    dim: int = 100
    ngram_lo: int = 2
    ngram_hi: int = 2
    buckets: int = 2_000_000
    lr: float = 0.1
    epochs: int = 5
    min_count: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be > 0, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be >= 1, got {self.min_count}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.ngrams_enabled:
            if self.ngram_lo < 2:
                raise ConfigError(f"n-gram lower bound must be >= 2, got {self.ngram_lo}")
            if self.buckets < 1:
                raise ConfigError("buckets must be > 0 when n-grams are enabled")

    @property
    def ngrams_enabled(self) -> bool:
        return self.ngram_hi >= self.ngram_lo

    @property
    def bucket_rows(self) -> int:
        return self.buckets if self.ngrams_enabled else 0


@dataclass
class Vocabulary:
    tokens: list
    freqs: list
    min_count: int
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def ids(self, tokens: Sequence[str]) -> list[int]:
        get = self.index.get
        return [get(t, UNK_ID) for t in tokens]


def build_vocab(corpus: Corpus, min_count: int = 5) -> Vocabulary:
    """Keep tokens seen at least ``min_count`` times; ids by (frequency desc, token)."""
    if len(corpus) == 0:
        raise DataError("empty corpus")
    counts = Counter()
    for doc in corpus:
        counts.update(doc.tokens)
    kept = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    if not kept:
        raise DataError(f"vocabulary is empty after pruning at min_count={min_count}")
    return Vocabulary([t for t, _ in kept], [c for _, c in kept], min_count)


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def ngram_ids(word_ids: Sequence[int], n_range: tuple[int, int], buckets: int, vocab_size: int) -> list[int]:
    """Embedding rows of the hashed word n-grams of a word-id sequence."""
    lo, hi = n_range
    if hi < lo:
        return []
    if lo < 2:
        raise ConfigError(f"n-gram lower bound must be >= 2, got {lo}")
    if buckets <= 0:
        raise ConfigError("buckets must be > 0")
    out = []
    words = list(word_ids)
    for n in range(lo, hi + 1):
        for i in range(len(words) - n + 1):
            gram = words[i:i + n]
            if UNK_ID in gram:
                continue
            key = " ".join(map(str, gram)).encode("ascii")
            out.append(vocab_size + fnv1a_64(key) % buckets)
    return out


@dataclass
class ClassifierModel:
    vocab: Vocabulary
    embeddings: np.ndarray
    tree: HuffmanTree
    labels: LabelTable
    hyper: Hyperparameters
    preprocess: PreprocessConfig = PreprocessConfig()

    def __post_init__(self):
        rows = len(self.vocab) + self.hyper.bucket_rows
        if self.embeddings.shape != (rows, self.hyper.dim):
            raise ConfigError(f"embedding shape {self.embeddings.shape} != ({rows}, {self.hyper.dim})")
        if self.tree.dim != self.hyper.dim or self.tree.n_labels != len(self.labels):
            raise ConfigError("tree does not match model dimension or label count")

    def feature_ids(self, tokens: Sequence[str]) -> np.ndarray:
        words = self.vocab.ids(tokens)
        ids = [w for w in words if w != UNK_ID]
        h = self.hyper
        if h.ngrams_enabled:
            ids += ngram_ids(words, (h.ngram_lo, h.ngram_hi), h.buckets, len(self.vocab))
        return np.array(ids, dtype=np.int64)

    def doc_vector(self, tokens: Sequence[str]) -> np.ndarray:
        return mean_rows(self.embeddings, self.feature_ids(tokens))

    def predict_proba(self, tokens: Sequence[str]) -> np.ndarray:
        return self.tree.probs(self.doc_vector(tokens))

    def predict_label(self, tokens: Sequence[str]) -> int:
        return int(np.argmax(self.predict_proba(tokens)))


def init_model(corpus: Corpus, hyper: Hyperparameters = Hyperparameters(), preprocess=PreprocessConfig(), vocab=None) -> ClassifierModel:
    """Vocabulary, label tree and initial parameters for ``corpus``.

    Embedding rows are uniform in ``[-1/(2 dim), 1/(2 dim))`` drawn from the
    ``init`` sub-stream of ``hyper.seed``; tree parameters start at zero.
    """
    vocab = vocab or build_vocab(corpus, hyper.min_count)
    counts = corpus.label_counts()
    if (counts == 0).any():
        raise DataError(f"every label needs at least one training document, counts {counts.tolist()}")
    tree = build_huffman(counts, hyper.dim)
    rows = len(vocab) + hyper.bucket_rows
    rng = substream(hyper.seed, "init")
    emb = rng.random((rows, hyper.dim), dtype=np.float32)
    emb -= np.float32(0.5)
    emb *= np.float32(1.0 / hyper.dim)
    return ClassifierModel(vocab, emb, tree, corpus.labels, hyper, preprocess)


def doc_vector(model: ClassifierModel, tokens) -> np.ndarray:
    return model.doc_vector(tokens)


def predict(model: ClassifierModel, tokens) -> dict[int, float]:
    return dict(enumerate(model.predict_proba(tokens).tolist()))


def _sgd_pass(model, docs, order, lr0, done, total, lock=None):
    """One pass over ``docs[order]``; returns the summed pre-update log-likelihood."""
    emb = model.embeddings
    tree = model.tree
    acc = 0.0
    for pos, i in enumerate(order):
        ids, label = docs[i]
        lr = lr0 * (1.0 - (done + pos) / total)
        x = mean_rows(emb, ids)
        logp, grad_x = tree.update(x, label, lr)
        if not math.isfinite(logp) or not np.isfinite(grad_x).all():
            raise DivergenceError(f"non-finite objective at update {done + pos} (document {i}, lr {lr:.3g})")
        if len(ids):
            np.add.at(emb, ids, (lr / len(ids)) * grad_x.astype(emb.dtype))
        acc += logp
    return acc


def train(model: ClassifierModel, corpus: Corpus, lr: float | None = None, epochs: int | None = None, workers: int = 1):
    """Fit ``model`` in place on ``corpus``.

    Returns
    -------
    model : ClassifierModel
        The same object, trained.
    objective_log : list of float
        Mean log-likelihood of each epoch, accumulated before each update.

    Notes
    -----
    ``workers > 1`` runs unsynchronised threads over disjoint shards of each
    epoch; the result then depends on thread scheduling.
    """
    lr = model.hyper.lr if lr is None else lr
    epochs = model.hyper.epochs if epochs is None else epochs
    if lr <= 0:
        raise ConfigError(f"learning rate must be > 0, got {lr}")
    if tuple(corpus.labels.names) != tuple(model.labels.names):
        raise DataError("corpus labels differ from model labels")
    if epochs == 0 or len(corpus) == 0:
        return model, []
    docs = [(model.feature_ids(d.tokens), d.label) for d in corpus]
    n = len(docs)
    total = epochs * n
    rng = substream(model.hyper.seed, "shuffle")
    objective_log = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        done = epoch * n
        if workers <= 1:
            acc = _sgd_pass(model, docs, order, lr, done, total)
        else:
            shards = np.array_split(order, workers)
            sums = [0.0] * workers
            errors = []

            def run(k):
                try:
                    sums[k] = _sgd_pass(model, docs, shards[k], lr, done, total)
                except Exception as exc:  # re-raised on the main thread
                    errors.append(exc)

            threads = [threading.Thread(target=run, args=(k,)) for k in range(workers)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            if errors:
                raise errors[0]
            acc = sum(sums)
        objective_log.append(acc / n)
        log.info("epoch %d/%d objective %.6f", epoch + 1, epochs, acc / n)
    return model, objective_log


def fit(corpus: Corpus, hyper: Hyperparameters = Hyperparameters(), preprocess=PreprocessConfig(), workers: int = 1):
    model = init_model(corpus, hyper, preprocess)
    return train(model, corpus, workers=workers)


# -- serialization ---------------------------------------------------------

def _write_core(model: ClassifierModel) -> bytes:
    w = Writer()
    h = model.hyper
    w.u32(h.dim)
    w.u16(h.ngram_lo)
    w.u16(h.ngram_hi)
    w.u64(h.buckets)
    w.f64(h.lr)
    w.u32(h.epochs)
    w.u32(h.min_count)
    w.u64(h.seed)
    w.u32(len(model.labels))
    for name in model.labels.names:
        w.text(name)
    w.u64(len(model.vocab))
    for tok, freq in zip(model.vocab.tokens, model.vocab.freqs):
        w.text(tok)
        w.u64(freq)
    rows, cols = model.embeddings.shape
    w.u64(rows)
    w.u32(cols)
    w.f32_array(model.embeddings)
    model.tree.write(w)
    return w.getvalue()


def _read_core(payload: bytes, preprocess: PreprocessConfig) -> ClassifierModel:
    r = Reader(payload, "classifier section")
    hyper = Hyperparameters(
        dim=r.u32(), ngram_lo=r.u16(), ngram_hi=r.u16(), buckets=r.u64(),
        lr=r.f64(), epochs=r.u32(), min_count=r.u32(), seed=r.u64(),
    )
    labels = LabelTable(tuple(r.text() for _ in range(r.u32())))
    tokens, freqs = [], []
    for _ in range(r.u64()):
        tokens.append(r.text())
        freqs.append(r.u64())
    vocab = Vocabulary(tokens, freqs, hyper.min_count)
    rows, cols = r.u64(), r.u32()
    emb = r.f32_array((rows, cols)).copy()
    tree = HuffmanTree.read(r)
    r.expect_end()
    try:
        return ClassifierModel(vocab, emb, tree, labels, hyper, preprocess)
    except ConfigError as exc:
        raise ModelFormatError(f"inconsistent model: {exc}") from None


def model_sections(model: ClassifierModel) -> dict[bytes, bytes]:
    prep = json.dumps(model.preprocess.to_dict(), sort_keys=True, ensure_ascii=False)
    w = Writer()
    w.text(prep)
    return {b"CLSF": _write_core(model), b"PREP": w.getvalue()}


def model_from_sections(sections: dict[bytes, bytes]) -> ClassifierModel:
    if b"CLSF" not in sections:
        raise ModelFormatError("container has no classifier section")
    prep = PreprocessConfig()
    if b"PREP" in sections:
        r = Reader(sections[b"PREP"], "preprocess section")
        prep = PreprocessConfig.from_dict(json.loads(r.text()))
        r.expect_end()
    return _read_core(sections[b"CLSF"], prep)


def save_model(model: ClassifierModel) -> bytes:
    return container.pack(model_sections(model))


def load_model(data: bytes) -> ClassifierModel:
    return model_from_sections(container.unpack(data))


def hyper_dict(h: Hyperparameters) -> dict:
    return asdict(h)
