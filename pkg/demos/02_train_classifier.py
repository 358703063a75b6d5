"""
Training the bag-of-n-grams classifier
======================================

Build the label Huffman tree, train with SGD, inspect the objective, save
and reload the model.
"""

import numpy as np

from vtdetect.corpus import split
from vtdetect.evaluate import compare
from vtdetect.fasttext import Hyperparameters, fit, load_model, save_model

from toy_data import toy_corpus

corpus = toy_corpus(n=1000, noise=0.3)
train, test = split(corpus, 0.2, seed=0)

# small buckets keep the table tiny; the defaults are sized for real corpora
hyper = Hyperparameters(dim=20, buckets=10_000, min_count=1, epochs=5, seed=0)
model, objective = fit(train, hyper)
print("objective per epoch:", np.round(objective, 4))

# two labels: both leaves sit at depth 1
print("tree codes:", model.tree.codes())
print("P(label | 'kill you all'):", model.predict_proba("kill you all".split()).round(4))

blob = save_model(model)
again = load_model(blob)
assert save_model(again) == blob
print(f"model file: {len(blob)} bytes, round trip byte-exact")

table = compare([("fasttext", lambda d: model.predict_label(d.tokens))], test)
print(table.to_text())
