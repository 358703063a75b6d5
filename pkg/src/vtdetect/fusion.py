"""Masking augmentation and the fused (external embedding + fastText) head.

The external encoder is not part of this package: its document vectors
arrive through a text file (see :func:`load_embeddings`). The fused head
concatenates the frozen classifier's document vector with the external
vector, rescales each half to unit mean L2 norm over the training set, and
trains a fresh hierarchical-softmax layer on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import container
from ._rng import substream, substream_seed
from .container import Reader, Writer
from .corpus import Corpus, Document, _round_half_up
from .errors import ConfigError, DataError, DivergenceError, ModelFormatError
from .fasttext import ClassifierModel, model_from_sections, model_sections
from .hsoftmax import HuffmanTree, build_huffman

MASK_TOKEN = "[MASK]"
MASK, RANDOM, KEEP = "MASK", "RANDOM", "KEEP"


@dataclass(frozen=True)
class MaskedSequence:
    tokens: tuple
    targets: tuple  # of (position, original token, action)


def apply_actions(tokens: Sequence[str], actions) -> MaskedSequence:
    """Apply explicit ``(position, action, replacement)`` triples.

    ``replacement`` is only read for RANDOM.
    """
    out = list(tokens)
    targets = []
    for pos, action, replacement in sorted(actions, key=lambda a: a[0]):
        if action == MASK:
            out[pos] = MASK_TOKEN
        elif action == RANDOM:
            out[pos] = replacement
        elif action != KEEP:
            raise ConfigError(f"unknown masking action {action!r}")
        targets.append((pos, tokens[pos], action))
    return MaskedSequence(tuple(out), tuple(targets))


def mask_tokens(seq: Sequence[str], rate: float, vocab, seed: int) -> MaskedSequence:
    """Corrupt ``round(rate * len(seq))`` uniformly chosen positions.

    Each chosen position becomes ``[MASK]`` with probability 0.8, a uniform
    draw from ``vocab`` with probability 0.1, or stays as it is.
    ``vocab`` is a :class:`~.fasttext.Vocabulary` or a token sequence.
    """
    if not 0 < rate < 1:
        raise ConfigError(f"mask rate must lie in (0, 1), got {rate}")
    tokens = tuple(seq)
    pool = getattr(vocab, "tokens", vocab)
    n_targets = _round_half_up(rate * len(tokens))
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(len(tokens), size=n_targets, replace=False)) if n_targets else []
    actions = []
    for pos in positions:
        u = rng.random()
        if u < 0.8:
            actions.append((int(pos), MASK, None))
        elif u < 0.9:
            actions.append((int(pos), RANDOM, pool[int(rng.integers(len(pool)))]))
        else:
            actions.append((int(pos), KEEP, None))
    return apply_actions(tokens, actions)


def augment_corpus(corpus: Corpus, rate: float = 0.15, copies: int = 1, seed: int = 0, vocab=None) -> Corpus:
    """Append ``copies`` masked variants after every document, labels kept.

    Replacement words default to the corpus's own token types (sorted).
    """
    if copies < 0:
        raise ConfigError(f"copies must be >= 0, got {copies}")
    if copies == 0:
        return corpus.with_documents(corpus.documents)
    if vocab is None:
        vocab = sorted({t for d in corpus for t in d.tokens})
    docs = []
    for i, doc in enumerate(corpus):
        docs.append(doc)
        for c in range(copies):
            masked = mask_tokens(doc.tokens, rate, vocab, substream_seed(seed, f"mask/{i}/{c}"))
            docs.append(Document(masked.tokens, doc.label, f"{doc.doc_id}#m{c}"))
    return corpus.with_documents(docs)


@dataclass
class DocEmbeddings:
    dim: int
    vectors: dict
    source: str = ""

    def __len__(self):
        return len(self.vectors)

    def __getitem__(self, doc_id) -> np.ndarray:
        try:
            return self.vectors[doc_id]
        except KeyError:
            raise DataError(f"no external embedding for document {doc_id!r}") from None

    def __contains__(self, doc_id):
        return doc_id in self.vectors


def load_embeddings(path) -> DocEmbeddings:
    """Read ``N e`` followed by N lines of ``doc_id f_1 ... f_e``."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"embedding file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty embedding file")
    try:
        n, dim = (int(v) for v in lines[0].split())
    except ValueError:
        raise DataError(f"{path}:1: header must be 'N e'") from None
    vectors = {}
    body = [(i, line) for i, line in enumerate(lines[1:], 2) if line.strip()]
    for lineno, line in body:
        parts = line.split()
        doc_id, values = parts[0], parts[1:]
        if len(values) != dim:
            raise DataError(f"{path}:{lineno}: expected {dim} values, found {len(values)}")
        if doc_id in vectors:
            raise DataError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        try:
            vec = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value") from None
        if not np.isfinite(vec).all():
            raise DataError(f"{path}:{lineno}: non-finite value")
        vectors[doc_id] = vec
    if len(vectors) != n:
        raise DataError(f"{path}: header announces {n} vectors, found {len(vectors)}")
    return DocEmbeddings(dim, vectors, str(path))


def write_embeddings(embeddings: DocEmbeddings, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(embeddings)} {embeddings.dim}\n")
        for doc_id, vec in embeddings.vectors.items():
            fh.write(doc_id + " " + " ".join(repr(float(v)) for v in vec) + "\n")


@dataclass
class FusionHead:
    base: ClassifierModel
    tree: HuffmanTree
    ext_dim: int
    scale_base: float
    scale_ext: float
    source: str = ""
    objective_log: list = field(default_factory=list)

    def __post_init__(self):
        if self.tree.dim != self.base.hyper.dim + self.ext_dim:
            raise ConfigError("fusion head dimension does not match base + external dimensions")

    def fused_vector(self, tokens, external_vec) -> np.ndarray:
        ext = np.asarray(external_vec, dtype=np.float64)
        if ext.shape != (self.ext_dim,):
            raise DataError(f"external vector has shape {ext.shape}, head expects ({self.ext_dim},)")
        return np.concatenate([self.scale_base * self.base.doc_vector(tokens), self.scale_ext * ext])

    def predict_proba(self, tokens, external_vec) -> np.ndarray:
        return self.tree.probs(self.fused_vector(tokens, external_vec))

    def predict_label(self, tokens, external_vec) -> int:
        return int(np.argmax(self.predict_proba(tokens, external_vec)))


def _unit_mean_scale(vectors: np.ndarray) -> float:
    mean_norm = float(np.linalg.norm(vectors, axis=1).mean()) if len(vectors) else 0.0
    return 1.0 / mean_norm if mean_norm > 0 else 1.0


def fused_inputs(base: ClassifierModel, embeddings: DocEmbeddings, corpus: Corpus):
    """Unscaled (base, external) arrays, one row per document."""
    ft = np.array([base.doc_vector(d.tokens) for d in corpus])
    ext = np.array([embeddings[d.doc_id] for d in corpus]).reshape(len(corpus), embeddings.dim)
    return ft, ext


def train_fused(base: ClassifierModel, embeddings: DocEmbeddings, corpus: Corpus,
                lr: float = 0.1, epochs: int = 5, seed: int = 0):
    """Train a hierarchical-softmax head on fused vectors; ``base`` stays frozen.

    Returns
    -------
    head : FusionHead
    objective_log : list of float
    """
    if lr <= 0:
        raise ConfigError(f"learning rate must be > 0, got {lr}")
    if epochs < 0:
        raise ConfigError(f"epochs must be >= 0, got {epochs}")
    if tuple(corpus.labels.names) != tuple(base.labels.names):
        raise DataError("corpus labels differ from base model labels")
    ft, ext = fused_inputs(base, embeddings, corpus)
    s_base, s_ext = _unit_mean_scale(ft), _unit_mean_scale(ext)
    X = np.hstack([s_base * ft, s_ext * ext])
    labels = corpus.label_ids
    tree = build_huffman(corpus.label_counts(), X.shape[1])
    rng = substream(seed, "shuffle")
    n = len(X)
    total = epochs * n
    objective_log = []
    for epoch in range(epochs):
        acc = 0.0
        for pos, i in enumerate(rng.permutation(n)):
            step = epoch * n + pos
            logp, _ = tree.update(X[i], int(labels[i]), lr * (1.0 - step / total))
            if not math.isfinite(logp):
                raise DivergenceError(f"non-finite objective at update {step} (document {i})")
            acc += logp
        objective_log.append(acc / n)
    head = FusionHead(base, tree, embeddings.dim, s_base, s_ext, embeddings.source, objective_log)
    return head, objective_log


def predict_fused(head: FusionHead, tokens, external_vec) -> dict[int, float]:
    return dict(enumerate(head.predict_proba(tokens, external_vec).tolist()))


def _write_head(head: FusionHead) -> bytes:
    w = Writer()
    w.u32(head.ext_dim)
    w.f64(head.scale_base)
    w.f64(head.scale_ext)
    w.text(head.source)
    head.tree.write(w)
    return w.getvalue()


def save_fused(head: FusionHead) -> bytes:
    sections = model_sections(head.base)
    sections[b"FUSE"] = _write_head(head)
    return container.pack(sections)


def load_fused(data: bytes) -> FusionHead:
    sections = container.unpack(data)
    if b"FUSE" not in sections:
        raise ModelFormatError("container has no fusion-head section")
    base = model_from_sections(sections)
    r = Reader(sections[b"FUSE"], "fusion section")
    ext_dim, s_base, s_ext, source = r.u32(), r.f64(), r.f64(), r.text()
    tree = HuffmanTree.read(r)
    r.expect_end()
    try:
        return FusionHead(base, tree, ext_dim, s_base, s_ext, source)
    except ConfigError as exc:
        raise ModelFormatError(str(exc)) from None
