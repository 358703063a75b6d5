import csv

import pytest
from hypothesis import given, settings, strategies as st

from vtdetect.corpus import (
    PreprocessConfig, RawRecord, load_dataset, load_stopwords, make_corpus, parse_labels,
    preprocess, read_corpus, split,
)
from vtdetect.errors import DataError

from conftest import SAMPLE_ROWS, corpus_of


def write_csv(path, rows, header=("Content", "Label", "Content_int")):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def test_load_table1_rows(tmp_path):
    path = write_csv(tmp_path / "d.csv", [(t, y, "[1, 2]") for t, y in SAMPLE_ROWS])
    records = load_dataset(path)
    assert len(records) == 3
    assert records[1] == RawRecord(SAMPLE_ROWS[1][0], "1", 1)


def test_quoted_commas_survive(tmp_path):
    path = write_csv(tmp_path / "d.csv", [("hello, world", "0", "x")])
    assert load_dataset(path)[0].content == "hello, world"


def test_header_only_file(tmp_path):
    path = write_csv(tmp_path / "d.csv", [])
    with pytest.raises(DataError, match="no data rows"):
        load_dataset(path)


def test_missing_file_and_column(tmp_path):
    with pytest.raises(DataError, match="not found"):
        load_dataset(tmp_path / "nope.csv")
    path = write_csv(tmp_path / "d.csv", [("a", "0")], header=("Text", "Label"))
    with pytest.raises(DataError, match="Content"):
        load_dataset(path)
    assert load_dataset(path, {"content": "Text"})[0].content == "a"


def test_wrong_field_count_names_row(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("Content,Label\nok,0\nbad,1,extra\n", encoding="utf-8")
    with pytest.raises(DataError, match="row 1"):
        load_dataset(path)


def test_label_two_accepted_at_load(tmp_path):
    path = write_csv(tmp_path / "d.csv", [("a", "0", ""), ("b", "1", ""), ("c", "2", "")])
    records = load_dataset(path)
    assert records[2].label == "2"
    with pytest.raises(DataError, match="row 2"):
        parse_labels(records, expected=[0, 1])


def test_preprocess_table1_row1():
    tokens = preprocess(SAMPLE_ROWS[0][0], PreprocessConfig())
    assert len(tokens) == 14
    assert tokens[0] == "denial" and tokens[-1] == "retard"


def test_preprocess_empty_and_stopwords():
    assert preprocess("") == ()
    assert preprocess("the of an", PreprocessConfig(frozenset({"the", "of", "an"}))) == ()


def test_preprocess_punctuation_case_and_emoji():
    assert preprocess("Do you like to eat apples?") == ("do", "you", "like", "to", "eat", "apples", "?")
    assert preprocess("good\U0001F600day ❤️!!") == ("good", "day", "!!")
    assert preprocess("good\U0001F600day", PreprocessConfig(strip_emoticons=False)) == ("good", "\U0001F600", "day")
    assert preprocess("ABC", PreprocessConfig(lowercase=False)) == ("ABC",)


def test_load_stopwords(tmp_path):
    p = tmp_path / "stop.txt"
    p.write_text("the\n\nof\n", encoding="utf-8")
    assert load_stopwords(p) == frozenset({"the", "of"})


text_st = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60)
stop_st = st.frozensets(st.sampled_from(["the", "a", "of", "!", "x"]), max_size=4)


@given(text_st, stop_st)
def test_preprocess_idempotent_and_stopword_free(text, stop):
    cfg = PreprocessConfig(stop)
    once = preprocess(text, cfg)
    assert set(preprocess(" ".join(once), cfg)) == set(once)
    assert not set(once) & stop
    assert all(once)


def test_parse_labels():
    recs = [RawRecord("a", "0", 0), RawRecord("b", "1", 1)]
    table, ids = parse_labels(recs)
    assert table.names == ("0", "1") and ids == [0, 1]
    with pytest.raises(DataError, match=">= 2 labels"):
        parse_labels([RawRecord("a", "1", 0), RawRecord("b", "1", 1)])
    with pytest.raises(DataError, match="unparseable"):
        parse_labels([RawRecord("a", "zero", 0)])
    table, ids = parse_labels([RawRecord("a", "violent", 0), RawRecord("b", "0", 1)], ["benign", "violent"])
    assert ids == [1, 0]


def test_split_stratified_counts():
    corpus = corpus_of([(f"d{i}", i % 2) for i in range(100)])
    train, test = split(corpus, 0.2, seed=7)
    assert list(test.label_counts()) == [10, 10]
    assert len(train) == 80
    train2, test2 = split(corpus, 0.2, seed=7)
    assert [d.doc_id for d in test2] == [d.doc_id for d in test]
    assert [d.doc_id for d in train2] == [d.doc_id for d in train]


def test_split_empty_guard():
    corpus = corpus_of([(f"d{i}", i % 2) for i in range(10)])
    with pytest.raises(DataError, match="empty split"):
        split(corpus, 0.999, seed=1)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 2), min_size=6, max_size=80), st.floats(0.1, 0.6), st.integers(0, 2**32))
def test_split_conserves_documents(labels, frac, seed):
    names = ("0", "1", "2")
    corpus = corpus_of([(f"d{i}", y) for i, y in enumerate(labels)], names)
    try:
        train, test = split(corpus, frac, seed)
    except DataError:
        return
    ids_train = {d.doc_id for d in train}
    ids_test = {d.doc_id for d in test}
    assert not ids_train & ids_test
    assert len(train) + len(test) == len(corpus)
    for c in range(3):
        n_c = int(corpus.label_counts()[c])
        assert abs(test.label_counts()[c] - frac * n_c) <= 1


def test_read_corpus_provenance(tmp_path):
    path = write_csv(tmp_path / "d.csv", [(t, y, "") for t, y in SAMPLE_ROWS])
    cfg = PreprocessConfig()
    corpus = read_corpus(path, cfg)
    assert len(corpus) == 3
    assert corpus.provenance["preprocess_digest"] == cfg.digest()
    assert corpus.labels.names == ("0", "1")
    assert make_corpus(load_dataset(path), cfg).documents == corpus.documents
