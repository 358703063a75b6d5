import csv
import io
import json

import numpy as np
import pytest

from vtdetect.cli import main
from vtdetect.fusion import DocEmbeddings, write_embeddings

from conftest import SAMPLE_ROWS, write_dataset

FAST = ["--dim", "8", "--buckets", "500", "--min-count", "1", "--epochs", "3"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def model(tmp_path, dataset, capsys):
    path = tmp_path / "m.vtxt"
    assert run(capsys, "train", "--data", dataset, "--out", path, *FAST)[0] == 0
    return path


def test_train_writes_model_and_manifest(model):
    manifest = json.loads(model.with_name("m.vtxt.manifest.json").read_text())
    assert len(manifest["objective_log"]) == 3
    assert manifest["config"]["dim"] == 8 and manifest["seed"] == 0
    assert manifest["warnings"] == [] and manifest["wall_time_s"] >= 0
    assert model.read_bytes()[:4] == b"VTXT"


def test_zero_epochs_warns(tmp_path, dataset, capsys):
    out = tmp_path / "z.vtxt"
    assert run(capsys, "train", "--data", dataset, "--out", out, *FAST[:-2], "--epochs", "0")[0] == 0
    manifest = json.loads((tmp_path / "z.vtxt.manifest.json").read_text())
    assert manifest["objective_log"] == [] and manifest["warnings"]


def test_train_deterministic(tmp_path, dataset, capsys):
    for name in ("a", "b"):
        run(capsys, "train", "--data", dataset, "--out", tmp_path / name, "--seed", 42, *FAST, "--copies", 1)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_manifest_round_trip(tmp_path, model, dataset, capsys):
    again = tmp_path / "again.vtxt"
    code, _, _ = run(capsys, "train", "--config", model.with_name("m.vtxt.manifest.json"), "--out", again,
                     "--manifest", tmp_path / "again.json")
    assert code == 0
    assert again.read_bytes() == model.read_bytes()


def test_unknown_config_key(tmp_path, dataset, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dim": 8, "learning_rate": 0.1}))
    code, _, err = run(capsys, "train", "--config", cfg, "--data", dataset, "--out", tmp_path / "x")
    assert code == 1 and "learning_rate" in err


def test_bad_flag_is_config_error(capsys):
    assert run(capsys, "train", "--bogus")[0] == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_exit_code(tmp_path, dataset, capsys):
    code, _, err = run(capsys, "train", "--data", dataset, "--out", tmp_path / "d", *FAST, "--lr", "1e38")
    assert code == 3 and "non-finite" in err


def test_missing_data_exit_code(tmp_path, capsys):
    assert run(capsys, "train", "--data", tmp_path / "nope.csv", "--out", tmp_path / "x")[0] == 2


def test_predict_jsonl(tmp_path, model, capsys, monkeypatch):
    text = tmp_path / "in.txt"
    text.write_text(SAMPLE_ROWS[1][0] + "\n\nlove the team\n", encoding="utf-8")
    code, out, _ = run(capsys, "predict", "--model", model, "--data", text)
    assert code == 0
    lines = [json.loads(line) for line in out.splitlines()]
    assert [o["id"] for o in lines] == ["0", "1", "2"]
    assert sum(lines[0]["probabilities"].values()) == pytest.approx(1, abs=1e-9)
    assert lines[2]["label"] in ("0", "1")


def test_predict_reports_bad_lines_and_continues(tmp_path, model, capsys):
    text = tmp_path / "in.txt"
    text.write_bytes(b"hello\n\xff\xfe\nlove\n")
    code, out, _ = run(capsys, "predict", "--model", model, "--data", text)
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and "error" in rows[1] and "label" in rows[2]


def test_predict_empty_input(tmp_path, model, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert run(capsys, "predict", "--model", model, "--data", empty)[:2] == (0, "")


def test_predict_corrupt_model(tmp_path, capsys):
    bad = tmp_path / "bad.vtxt"
    bad.write_bytes(b"garbage bytes here")
    code, _, err = run(capsys, "predict", "--model", bad, "--data", bad)
    assert code == 2 and "not a model file" in err


def test_evaluate_csv(model, dataset, capsys):
    code, out, _ = run(capsys, "evaluate", "--data", dataset, "--model", model, "--model", model, "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["model", "acc", "pre", "recall", "f1"]
    assert [r[0] for r in rows[1:]] == ["m", "m#2"] and rows[1][1:] == rows[2][1:]


def test_evaluate_text_and_json(tmp_path, model, dataset, capsys):
    code, out, _ = run(capsys, "evaluate", "--data", dataset, "--model", model, "--test-fraction", 0.2)
    assert code == 0 and "Acc (%)" in out
    report = tmp_path / "r.json"
    run(capsys, "evaluate", "--data", dataset, "--model", model, "--format", "json", "--out", report)
    assert json.loads(report.read_text())["rows"][0]["model"] == "m"


def test_evaluate_header_only(tmp_path, model, capsys):
    empty = tmp_path / "h.csv"
    empty.write_text("Content,Label\n")
    assert run(capsys, "evaluate", "--data", empty, "--model", model)[0] == 2


def test_features_fifty_rows(tmp_path, capsys):
    big = write_dataset(tmp_path / "big.csv", n=400, seed=3)
    code, out, _ = run(capsys, "features", "--data", big, "--method", "chi2", "--k", 50)
    rows = list(csv.reader(io.StringIO(out)))
    # the synthetic vocabulary has 30 types, fewer than 50
    assert code == 0 and rows[0] == ["term", "score", "method", "df"] and len(rows) - 1 == 30
    wide = tmp_path / "wide.csv"
    with open(wide, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["Content", "Label"])
        for i in range(120):
            w.writerow([f"tok{i} tok{i + 1} common", str(i % 2)])
    code, out, _ = run(capsys, "features", "--data", wide, "--method", "chi2", "--k", 50)
    assert code == 0 and len(out.splitlines()) == 51
    assert run(capsys, "features", "--data", wide, "--method", "nonsense")[0] == 1


def test_keywords_command(dataset, capsys, tmp_path):
    lex = tmp_path / "lex.tsv"
    lex.write_text("kill\tverb\nnazi\tnoun\n")
    code, out, _ = run(capsys, "keywords", "--data", dataset, "--label", "1", "--k", 5, "--lexicon", lex)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 5
    assert rows[0]["term"] in {"kill", "hate", "idiot", "die", "stupid", "trash", "filthy", "nazi", "scum", "destroy"}


def lm_pair(tmp_path, dataset, capsys):
    for label, name in (("1", "v.lm"), ("0", "b.lm")):
        assert run(capsys, "lm", "--data", dataset, "--label", label, "--out", tmp_path / name)[0] == 0
    return tmp_path / "v.lm", tmp_path / "b.lm"


def test_rules_command(tmp_path, dataset, capsys):
    v, b = lm_pair(tmp_path, dataset, capsys)
    rules = tmp_path / "r.rules"
    rules.write_text("r1\tkw:kill|love;any:2\n")
    docs = tmp_path / "docs.txt"
    docs.write_text("kill you all\nlove the team\nnothing here\n")
    code, out, _ = run(capsys, "rules", "--data", docs, "--rules", rules, "--violent-lm", v, "--benign-lm", b,
                       "--threshold", "0.0")
    rows = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert [(r["doc"], r["status"]) for r in rows] == [("0", "kept"), ("1", "dropped")]
    again = run(capsys, "rules", "--data", docs, "--rules", rules, "--violent-lm", v, "--benign-lm", b)[1]
    assert again == out


def test_lm_order_error(tmp_path, dataset, capsys):
    assert run(capsys, "lm", "--data", dataset, "--lm-order", 1, "--out", tmp_path / "x")[0] == 1


def test_fuse_requires_embeddings(tmp_path, model, dataset, capsys):
    code, _, err = run(capsys, "fuse", "--data", dataset, "--model", model, "--out", tmp_path / "f")
    assert code == 1 and "--embeddings" in err


def test_fuse_and_use(tmp_path, model, dataset, capsys):
    rng = np.random.default_rng(0)
    emb = DocEmbeddings(3, {str(i): rng.normal(size=3) for i in range(200)})
    write_embeddings(emb, tmp_path / "e.txt")
    fused = tmp_path / "f.vtxt"
    assert run(capsys, "fuse", "--data", dataset, "--model", model, "--embeddings", tmp_path / "e.txt",
               "--out", fused)[0] == 0
    code, out, _ = run(capsys, "evaluate", "--data", dataset, "--model", model, "--model", fused,
                       "--embeddings", tmp_path / "e.txt")
    names = [line.split()[0] for line in out.splitlines()[1:-1]]
    assert code == 0 and names == ["m", "f"]
    assert run(capsys, "evaluate", "--data", dataset, "--model", fused)[0] == 1
    code, out, _ = run(capsys, "predict", "--model", fused, "--data", dataset, "--embeddings", tmp_path / "e.txt")
    assert code == 0 and len(out.splitlines()) == 200


def test_help_lists_defaults(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "train" in out
    code, out, _ = run(capsys, "train", "--help")
    assert code == 0
    for flag in ("--data", "--out", "--seed", "--dim", "--lr", "--epochs", "--min-count", "--ngrams",
                 "--buckets", "--stopwords", "--mask-rate", "--copies"):
        assert flag in out
    assert "default: 2000000" in out
