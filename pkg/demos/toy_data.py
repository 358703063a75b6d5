"""Small synthetic corpus in the Content/Label layout, shared by the demos."""

import numpy as np

from vtdetect.corpus import RawRecord, make_corpus

VIOLENT = ["kill", "hate", "idiot", "die", "stupid", "trash", "filthy", "nazi", "scum", "destroy"]
BENIGN = ["love", "great", "happy", "friend", "game", "music", "sunny", "thanks", "goal", "team"]
SHARED = ["you", "are", "a", "the", "this", "so", "is", "all", "today", "people"]


def toy_records(n=400, seed=0, noise=0.5):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        label = i % 2
        own = VIOLENT if label else BENIGN
        words = [own[j] if rng.random() < noise else SHARED[j] for j in rng.integers(0, 10, size=9)]
        records.append(RawRecord(" ".join(words), str(label), i))
    return records


def toy_corpus(n=400, seed=0, noise=0.5):
    return make_corpus(toy_records(n, seed, noise))
