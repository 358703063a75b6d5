"""
Masking augmentation and the fused head
=======================================

Corrupt tokens 80/10/10, then train a head on the concatenation of the
classifier's document vector and an external document embedding. The
external vectors here are synthetic stand-ins for an encoder's output.
"""

import numpy as np

from vtdetect.corpus import split
from vtdetect.fasttext import Hyperparameters, fit
from vtdetect.fusion import MASK, DocEmbeddings, apply_actions, augment_corpus, mask_tokens, train_fused

from toy_data import toy_corpus

print(" ".join(apply_actions("my dog is hairy".split(), [(3, MASK, None)]).tokens))
print(mask_tokens("just by being able to tweet this proves nothing".split(), 0.3, ["apple", "river"], seed=1))

corpus = toy_corpus(n=600, noise=0.15)
train, test = split(corpus, 0.25, seed=0)
train = augment_corpus(train, rate=0.15, copies=1, seed=0)
print(len(train), "training documents after one masked copy each")

base, _ = fit(train, Hyperparameters(dim=16, buckets=5000, min_count=1, seed=0))

# a weakly informative external signal: the true label plus heavy noise
rng = np.random.default_rng(0)
vectors = {d.doc_id: np.r_[d.label, 0.0] + rng.normal(0, 1.0, size=2) for d in corpus}
for d in train:
    vectors.setdefault(d.doc_id, vectors[d.doc_id.split("#")[0]])
emb = DocEmbeddings(2, vectors, "synthetic")

head, objective = train_fused(base, emb, train, epochs=5)
base_acc = np.mean([base.predict_label(d.tokens) == d.label for d in test])
fused_acc = np.mean([head.predict_label(d.tokens, emb[d.doc_id]) == d.label for d in test])
print(f"scales base={head.scale_base:.3f} ext={head.scale_ext:.3f}")
print(f"test accuracy: base {base_acc:.3f}, fused {fused_acc:.3f}")
