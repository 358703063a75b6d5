"""
Preprocessing and feature-selection statistics
===============================================

Tokenise raw comments, then rank terms by document frequency, mutual
information, information gain and chi-square.
"""

from vtdetect.corpus import PreprocessConfig, preprocess
from vtdetect.features import ContingencyTable, chi_square, mutual_information, select_features

from toy_data import toy_corpus

# emoji are stripped, case folded, punctuation split off
config = PreprocessConfig(stopwords=frozenset({"the", "of", "an"}))
print(preprocess("Denial of normal the con 😡 be asked to comment on tragedies, an emotional retard!", config))

# a single 2x2 table: A docs of the class contain the term, B other docs do, ...
table = ContingencyTable(A=10, B=20, C=30, D=40)
print("chi2      ", round(chi_square(table), 4))
print("MI (prob) ", round(mutual_information(table), 4))

# rankings over a whole corpus; violent words should dominate chi2 and IG
corpus = toy_corpus()
for method in ("DF", "IG", "CHI2"):
    top = select_features(corpus, method, k=5)
    print(f"{method:5s}", [s.term for s in top])
