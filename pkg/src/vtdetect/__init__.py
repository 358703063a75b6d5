"""Violent-text detection toolkit.

Modules
-------
corpus      CSV ingestion, preprocessing, stratified splits
features    DF / MI / IG / chi-square term statistics
keywords    chi2-FPN keyword extraction
lm_rules    n-gram language models and LM-constrained rule matching
hsoftmax    Huffman label tree and hierarchical softmax
fasttext    bag-of-n-grams classifier trained by SGD
fusion      masking augmentation and the external-embedding fusion head
evaluate    confusion matrices, metrics, comparison tables
cli         command-line front end (``vtdetect``)
"""

__version__ = "0.1.0"
