"""Hierarchical softmax over a Huffman tree of labels.

Every internal node ``j`` owns a parameter vector ``theta[j]``. At a node
the branch with code bit 1 (the left child) is taken with probability
``sigmoid(x . theta[j])`` and the bit-0 branch with the complement, so a
label's probability is the product of the branch probabilities on its
root-to-leaf path. Because the two branches of every node sum to one, the
label probabilities of any input sum to one.

The training objective is the mean log-likelihood of the gold labels;
:func:`objective_and_grad` returns it together with its exact gradient.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit, log_expit

from .container import Reader, Writer
from .errors import ConfigError, ModelFormatError

_LEAF, _INTERNAL = 0, 1


@dataclass
class HuffmanTree:
    """Label tree plus one parameter row per internal node.

    Attributes
    ----------
    freqs : ndarray of int, shape (K,)
    left, right : ndarray of int, shape (K - 1,)
        Children of internal node ``j`` (in creation order). Values
        ``< K`` are labels, values ``>= K`` refer to internal node
        ``value - K``.
    theta : ndarray, shape (K - 1, dim)
    """

    freqs: np.ndarray
    left: np.ndarray
    right: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        k = len(self.freqs)
        self.paths = [None] * k
        # walk from the root (last created node) down to every leaf
        stack = [(2 * k - 2, (), ())]
        while stack:
            node, nodes, bits = stack.pop()
            if node < k:
                self.paths[node] = (np.array(nodes, dtype=np.int64), np.array(bits, dtype=np.int64))
                continue
            j = node - k
            stack.append((int(self.right[j]), nodes + (j,), bits + (0,)))
            stack.append((int(self.left[j]), nodes + (j,), bits + (1,)))
        if any(p is None for p in self.paths):
            raise ModelFormatError("Huffman tree does not reach every label")
        self._signs = [2.0 * bits - 1.0 for _, bits in self.paths]

    @property
    def n_labels(self) -> int:
        return len(self.freqs)

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    def depth(self, label: int) -> int:
        return len(self.paths[label][0])

    def depths(self) -> np.ndarray:
        return np.array([self.depth(i) for i in range(self.n_labels)])

    def codes(self) -> list[tuple]:
        return [tuple(int(b) for b in bits) for _, bits in self.paths]

    def expected_code_length(self) -> float:
        return float(np.dot(self.freqs, self.depths()))

    def log_probs(self, x: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """Log-probability of every label for one input vector."""
        theta = self.theta if theta is None else theta
        z = theta @ x
        return np.array([log_expit(s * z[n]).sum() for (n, _), s in zip(self.paths, self._signs)])

    def probs(self, x: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
        """Label probabilities as direct products of branch probabilities."""
        theta = self.theta if theta is None else theta
        z = theta @ x
        return np.array([np.prod(expit(s * z[n])) for (n, _), s in zip(self.paths, self._signs)])

    def update(self, x: np.ndarray, label: int, lr: float) -> tuple[float, np.ndarray]:
        """One gradient-ascent step on ``log P(label | x)`` for ``theta``.

        Returns the log-probability before the step and the gradient with
        respect to ``x`` (computed with the pre-step parameters).
        """
        nodes, bits = self.paths[label]
        th = self.theta[nodes]
        z = th @ x
        g = bits - expit(z)
        logp = float(log_expit(self._signs[label] * z).sum())
        grad_x = g @ th
        self.theta[nodes] += (lr * np.outer(g, x)).astype(self.theta.dtype, copy=False)
        return logp, grad_x

    def copy_structure(self, dim: int, dtype=np.float32) -> "HuffmanTree":
        return HuffmanTree(self.freqs.copy(), self.left.copy(), self.right.copy(), np.zeros((self.n_labels - 1, dim), dtype=dtype))

    def write(self, w: Writer) -> None:
        k = self.n_labels
        w.u32(k)
        w.u32(self.dim)
        for f in self.freqs:
            w.u64(int(f))

        def emit(node):
            if node < k:
                w.u8(_LEAF)
                w.u32(node)
                return
            j = node - k
            w.u8(_INTERNAL)
            w.u32(j)
            w.f32_array(self.theta[j])
            emit(int(self.left[j]))
            emit(int(self.right[j]))

        emit(2 * k - 2)

    @classmethod
    def read(cls, r: Reader) -> "HuffmanTree":
        k = r.u32()
        dim = r.u32()
        if k < 2:
            raise ModelFormatError(f"tree with {k} labels")
        freqs = np.array([r.u64() for _ in range(k)], dtype=np.int64)
        left = np.full(k - 1, -1, dtype=np.int64)
        right = np.full(k - 1, -1, dtype=np.int64)
        theta = np.zeros((k - 1, dim), dtype=np.float32)

        def parse():
            kind = r.u8()
            idx = r.u32()
            if kind == _LEAF:
                if idx >= k:
                    raise ModelFormatError(f"leaf label {idx} out of range")
                return idx
            if kind != _INTERNAL or idx >= k - 1:
                raise ModelFormatError("corrupt tree node")
            theta[idx] = r.f32_array((dim,))
            left[idx] = parse()
            right[idx] = parse()
            return k + idx

        root = parse()
        if root != 2 * k - 2 or (left < 0).any():
            raise ModelFormatError("corrupt tree structure")
        return cls(freqs, left, right, theta)


def build_huffman(label_freqs: Sequence[int] | Mapping[int, int], dim: int = 0, dtype=np.float32) -> HuffmanTree:
    """Huffman tree over label ids by repeated merging of the two lightest nodes.

    ``label_freqs`` is indexed by label id (a sequence, or a mapping with keys
    ``0..K-1``). Ties are broken by label id for leaves, which precede merged
    nodes; merged nodes compare by creation order. The first node popped
    becomes the left (code bit 1) child. ``theta`` starts at zero.
    """
    if isinstance(label_freqs, Mapping):
        keys = sorted(label_freqs)
        if keys != list(range(len(keys))):
            raise ConfigError(f"label ids must be 0..K-1, got {keys}")
        label_freqs = [label_freqs[i] for i in keys]
    freqs = np.asarray(label_freqs, dtype=np.int64)
    k = len(freqs)
    if k < 2:
        raise ConfigError(f"need at least 2 labels for a Huffman tree, got {k}")
    if (freqs <= 0).any():
        raise ConfigError("label frequencies must be positive")
    heap = [(int(f), i, i) for i, f in enumerate(freqs)]
    heapq.heapify(heap)
    left = np.empty(k - 1, dtype=np.int64)
    right = np.empty(k - 1, dtype=np.int64)
    for j in range(k - 1):
        f1, _, n1 = heapq.heappop(heap)
        f2, _, n2 = heapq.heappop(heap)
        left[j], right[j] = n1, n2
        heapq.heappush(heap, (f1 + f2, k + j, k + j))
    return HuffmanTree(freqs, left, right, np.zeros((k - 1, dim), dtype=dtype))


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def node_prob(x: np.ndarray, theta: np.ndarray) -> float:
    """Probability of the code-bit-1 branch at a node."""
    x = np.asarray(x)
    theta = np.asarray(theta)
    if x.shape != theta.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {theta.shape}")
    return sigmoid(float(np.dot(x, theta)))


def mean_rows(emb: np.ndarray, ids: np.ndarray) -> np.ndarray:
    if len(ids) == 0:
        return np.zeros(emb.shape[1], dtype=np.float64)
    return emb[ids].mean(axis=0, dtype=np.float64)


def objective_and_grad(emb, theta, tree: HuffmanTree, docs, with_grad: bool = True):
    """Mean log-likelihood over ``docs`` and its gradient.

    Parameters
    ----------
    emb : ndarray, shape (rows, dim)
        Input rows; a document's vector is the mean of its rows.
    theta : ndarray, shape (K - 1, dim)
    docs : sequence of (ids, label)

    Returns
    -------
    objective : float
    grad_emb, grad_theta : ndarray
        Same shapes as ``emb`` and ``theta`` (omitted if ``with_grad`` is
        False).
    """
    n = len(docs)
    total = 0.0
    g_emb = np.zeros_like(emb, dtype=np.float64)
    g_theta = np.zeros_like(theta, dtype=np.float64)
    for ids, label in docs:
        ids = np.asarray(ids, dtype=np.int64)
        x = mean_rows(emb, ids)
        nodes, bits = tree.paths[label]
        th = theta[nodes]
        z = th @ x
        total += float(log_expit(tree._signs[label] * z).sum())
        if not with_grad:
            continue
        g = bits - expit(z)
        np.add.at(g_theta, nodes, np.outer(g, x))
        if len(ids):
            np.add.at(g_emb, ids, np.broadcast_to((g @ th) / len(ids), (len(ids), emb.shape[1])))
    if not with_grad:
        return total / n
    return total / n, g_emb / n, g_theta / n
