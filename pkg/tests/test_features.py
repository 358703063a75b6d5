import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vtdetect.errors import ConfigError
from vtdetect.features import (
    ContingencyTable, build_contingency, chi_square, document_frequency, information_gain,
    mutual_information, rank, score_terms, select_features, TermScore, write_scores_csv,
)

from conftest import corpus_of
import oracles

table_st = st.builds(ContingencyTable, *[st.integers(0, 60)] * 4)
positive_table_st = st.builds(ContingencyTable, *[st.integers(1, 60)] * 4)


def test_contingency_hand_count():
    corpus = corpus_of([("bad", 1), ("bad", 0), ("good", 1), ("good", 0)])
    assert build_contingency(corpus, "bad", 1) == ContingencyTable(1, 1, 1, 1)
    t = build_contingency(corpus, "absent", 1)
    assert t.A == t.B == 0 and t.C + t.D == 4


def test_contingency_all_documents_one_class():
    corpus = corpus_of([("x y", 1), ("x", 1), ("z", 0)])
    sub = corpus.with_documents([d for d in corpus if d.label == 1])
    t = build_contingency(sub, "x", 1)
    assert t.B == 0 and t.D == 0


def test_document_frequency():
    corpus = corpus_of([("t", 0), ("t", 1), ("t u", 0)] + [("u", 1)] * 7)
    assert document_frequency(corpus, "t") == 3
    assert document_frequency(corpus, "nothing") == 0
    rep = corpus_of([("t t t t t", 0), ("u", 1)])
    assert document_frequency(rep, "t") == 1
    assert document_frequency(rep, "t") == build_contingency(rep, "t", 0).A + build_contingency(rep, "t", 0).B


def test_mutual_information_examples():
    assert mutual_information(ContingencyTable(1, 1, 1, 1)) == 0.0
    t = ContingencyTable(20, 5, 5, 70)
    assert mutual_information(t, "probability") == pytest.approx(math.log(3.2), abs=1e-12)
    assert mutual_information(t, "probability") == pytest.approx(1.1632, abs=1e-4)
    assert mutual_information(t, "counts") == pytest.approx(math.log(2.24), abs=1e-12)
    assert mutual_information(t, "counts") == pytest.approx(0.8065, abs=1e-4)


def test_mutual_information_smoothing_keeps_scores_finite():
    t = ContingencyTable(0, 3, 4, 5)
    smoothed = ContingencyTable(0.5, 3.5, 4.5, 5.5)
    assert mutual_information(t) == pytest.approx(math.log(0.5 * 14 / (4.0 * 5.0)))
    assert mutual_information(t) == mutual_information(smoothed)
    assert math.isfinite(mutual_information(ContingencyTable(3, 0, 4, 0), "counts"))
    with pytest.raises(ConfigError):
        mutual_information(t, "cubic")


def test_information_gain_examples():
    # balanced binary corpus of 4: term in both class-1 docs only
    perfect = [ContingencyTable(0, 2, 2, 0), ContingencyTable(2, 0, 0, 2)]
    assert information_gain(perfect) == pytest.approx(math.log(0.5), abs=1e-12)
    independent = [ContingencyTable(1, 1, 1, 1), ContingencyTable(1, 1, 1, 1)]
    assert information_gain(independent) == pytest.approx(2 * math.log(0.5), abs=1e-12)
    assert information_gain(perfect) > information_gain(independent)


def test_chi_square_examples():
    assert chi_square(ContingencyTable(1, 2, 2, 4)) == 0.0
    assert chi_square(ContingencyTable(10, 20, 30, 40)) == pytest.approx(4_000_000 / 5_040_000, rel=1e-15)
    assert chi_square(ContingencyTable(10, 20, 30, 40)) == pytest.approx(0.7937, abs=1e-4)
    assert chi_square(ContingencyTable(100, 200, 300, 400)) == pytest.approx(
        10 * chi_square(ContingencyTable(10, 20, 30, 40)), rel=1e-12)
    assert chi_square(ContingencyTable(0, 0, 3, 4)) == 0.0


@given(positive_table_st, st.integers(2, 9))
def test_chi_square_homogeneous(t, s):
    scaled = ContingencyTable(t.A * s, t.B * s, t.C * s, t.D * s)
    assert chi_square(scaled) == pytest.approx(s * chi_square(t), rel=1e-12, abs=1e-12)


@given(table_st)
def test_chi_square_zero_iff_independent(t):
    margins_nonzero = (t.A + t.C) * (t.B + t.D) * (t.A + t.B) * (t.C + t.D) > 0
    if margins_nonzero:
        assert (chi_square(t) == 0) == (t.A * t.D == t.C * t.B)


@given(table_st)
def test_chi_square_class_complement_symmetry(t):
    assert chi_square(t) == pytest.approx(chi_square(ContingencyTable(t.B, t.A, t.D, t.C)), rel=1e-12)


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 20))
def test_mi_zero_on_independent_tables(a, ratio_r, ratio_c):
    # rows proportional to columns: A:B = C:D
    t = ContingencyTable(a, a * ratio_r, a * ratio_c, a * ratio_r * ratio_c)
    assert mutual_information(t) == pytest.approx(0.0, abs=1e-12)


@given(table_st)
def test_mi_symmetric_under_transposition(t):
    # swapping the roles of term and class (B <-> C) leaves the PMI unchanged
    assert mutual_information(t) == pytest.approx(mutual_information(ContingencyTable(t.A, t.C, t.B, t.D)), abs=1e-12)


def test_mi_not_symmetric_under_full_complement():
    t = ContingencyTable(20, 5, 5, 70)
    assert mutual_information(t) != pytest.approx(mutual_information(ContingencyTable(t.D, t.C, t.B, t.A)))


@given(table_st)
def test_statistics_are_pure(t):
    assert chi_square(t) == chi_square(ContingencyTable(t.A, t.B, t.C, t.D))
    assert mutual_information(t) == mutual_information(ContingencyTable(t.A, t.B, t.C, t.D))


def random_corpus(rng, n_docs=30, n_terms=20, n_classes=2):
    docs = []
    for i in range(n_docs):
        label = int(rng.integers(n_classes))
        k = int(rng.integers(1, 6))
        docs.append((list(f"t{j}" for j in rng.integers(0, n_terms, size=k)), label))
    labels = [y for _, y in docs]
    if len(set(labels)) < n_classes:
        docs[0] = (docs[0][0], 1 - docs[1][1]) if n_classes == 2 else docs[0]
    return corpus_of(docs, tuple(str(c) for c in range(n_classes)))


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_contingency_sums_to_n(seed):
    corpus = random_corpus(np.random.default_rng(seed), n_classes=3)
    for term in ("t0", "t5", "t19", "zz"):
        for c in range(3):
            t = build_contingency(corpus, term, c)
            assert t.A + t.B + t.C + t.D == t.N == len(corpus)


def test_ig_matches_entropy_oracle_up_to_constant():
    rng = np.random.default_rng(3)
    for _ in range(50):
        corpus = random_corpus(rng)
        pairs_by_term = {}
        for term in {t for d in corpus for t in d.tokens}:
            pairs_by_term[term] = [(int(term in d.tokens), d.label) for d in corpus]
        h_c = oracles.class_entropy(next(iter(pairs_by_term.values())))
        scores = {s.term: s.score for s in score_terms(corpus, "IG")}
        for term, pairs in pairs_by_term.items():
            assert scores[term] == pytest.approx(oracles.entropy_gain(pairs) - 2 * h_c, abs=1e-10)


def test_select_features_ranks_exclusive_term_first():
    pairs = [("nazi hello", 1), ("nazi world", 1), ("hello world", 0), ("hello there", 0),
             ("world there", 1), ("there you", 0)]
    corpus = corpus_of(pairs)
    ranked = select_features(corpus, "chi2", k=10)
    assert ranked[0].term == "nazi"
    assert ranked[0].score > dict((s.term, s.score) for s in ranked)["world"]
    with pytest.raises(ConfigError):
        select_features(corpus, "chi2", k=0)
    assert len(select_features(corpus, "df", k=1000)) == 5
    assert [s.term for s in select_features(corpus, "df", k=10, min_df=3)] == ["hello", "there", "world"]


def test_rank_ties_lexicographic():
    scores = [TermScore("b", 1.0, "DF", 1), TermScore("a", 1.0, "DF", 1), TermScore("c", 2.0, "DF", 1)]
    assert [s.term for s in rank(scores)] == ["c", "a", "b"]


def test_select_features_methods_and_csv():
    corpus = corpus_of([("a b", 1), ("a c", 1), ("b c", 0), ("c d", 0)])
    for method in ("df", "mi", "mi_counts", "ig", "chi2", "MI_prob", "CHI2"):
        scores = select_features(corpus, method, k=3)
        assert all(math.isfinite(s.score) for s in scores)
    with pytest.raises(ConfigError):
        select_features(corpus, "tfidf", k=1)
    buf = io.StringIO()
    write_scores_csv(select_features(corpus, "chi2", k=2), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "term,score,method,df" and len(lines) == 3


def test_label_specific_scoring():
    corpus = corpus_of([("a", 1), ("a", 1), ("b", 0), ("a b", 0)])
    s1 = {s.term: s.score for s in score_terms(corpus, "MI_prob", label=1)}
    s_max = {s.term: s.score for s in score_terms(corpus, "MI_prob")}
    assert s_max["a"] >= s1["a"]
    assert s1["a"] == pytest.approx(mutual_information(build_contingency(corpus, "a", 1)))
