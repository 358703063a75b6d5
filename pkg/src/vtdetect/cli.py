"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure (e.g. training divergence). Every random choice derives from
``--seed`` through named sub-streams (``split``, ``init``, ``shuffle``,
``mask``).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from . import container
from ._rng import substream_seed
from .corpus import Document, PreprocessConfig, load_dataset, load_stopwords, make_corpus, preprocess, split
from .errors import ConfigError, DataError, ModelFormatError, NumericError
from .evaluate import compare
from .fasttext import Hyperparameters, init_model, load_model, model_from_sections, save_model, train
from .features import select_features, write_scores_csv
from .fusion import augment_corpus, load_embeddings, load_fused, save_fused, train_fused
from .keywords import PosLexicon, extract_keywords, write_keywords_csv
from .lm_rules import constrain_with_lm, load_lm, load_rules, match_rules, match_score, save_lm, train_lm

log = logging.getLogger("vtdetect")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _ngram_range(text):
    try:
        lo, hi = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


# -- shared helpers ------------------------------------------------------------

def _preprocess_config(args) -> PreprocessConfig:
    stop = load_stopwords(args.stopwords) if args.stopwords else frozenset()
    return PreprocessConfig(stop, lowercase=not args.no_lowercase, strip_emoticons=not args.keep_emoticons)


def _schema(args):
    return {"content": args.content_column, "label": args.label_column}


def _read_corpus(args, config, expected=None):
    records = load_dataset(args.data, _schema(args))
    return make_corpus(records, config, expected, source=args.data)


def _maybe_split(corpus, args, side):
    if not args.test_fraction:
        return corpus
    train_part, test_part = split(corpus, args.test_fraction, substream_seed(args.seed, "split"))
    return train_part if side == "train" else test_part


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None


def _label_id(labels, name):
    if name is None:
        return None
    return labels.id_of(str(name))


def _config_of(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("command", "config", "func", "verbose")}


def _write_manifest(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True, default=list) + "\n", encoding="utf-8")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="")


def _is_fused(data: bytes) -> bool:
    return b"FUSE" in container.unpack(data)


def _iter_inputs(args, config):
    """Yield ``(doc_id, tokens)`` or ``(doc_id, exception)`` per input document."""
    if args.data.endswith(".csv"):
        for rec in load_dataset(args.data, _schema(args)):
            yield str(rec.row_index), preprocess(rec.content, config)
        return
    stream = sys.stdin.buffer if args.data == "-" else open(args.data, "rb")
    with stream:
        for i, raw in enumerate(stream):
            try:
                text = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError as exc:
                yield str(i), exc
                continue
            yield str(i), preprocess(text, config)


# -- commands ------------------------------------------------------------------

def cmd_train(args):
    lo, hi = args.ngrams
    hyper = Hyperparameters(dim=args.dim, ngram_lo=lo, ngram_hi=hi, buckets=args.buckets, lr=args.lr,
                            epochs=args.epochs, min_count=args.min_count, seed=args.seed)
    config = _preprocess_config(args)
    corpus = _maybe_split(_read_corpus(args, config), args, "train")
    if args.copies:
        corpus = augment_corpus(corpus, args.mask_rate, args.copies, substream_seed(args.seed, "mask"))
    started = time.perf_counter()
    model = init_model(corpus, hyper, config)
    model, objective_log = train(model, corpus, workers=args.workers)
    wall = time.perf_counter() - started
    blob = save_model(model)
    Path(args.out).write_bytes(blob)
    warnings = ["epochs=0: model holds its random initialisation"] if args.epochs == 0 else []
    if args.workers > 1:
        warnings.append("workers>1: training is not bitwise reproducible")
    _write_manifest(args.manifest or args.out + ".manifest.json", {
        "command": "train", "config": _config_of(args), "seed": args.seed,
        "objective_log": objective_log, "wall_time_s": wall, "warnings": warnings,
        "n_documents": len(corpus), "vocab_size": len(model.vocab),
        "model_sha256": hashlib.sha256(blob).hexdigest(),
    })
    return EXIT_OK


def cmd_predict(args):
    data = _read_bytes(args.model)
    fused = _is_fused(data)
    if fused:
        if not args.embeddings:
            raise ConfigError("model has a fusion head: --embeddings is required")
        head = load_fused(data)
        model = head.base
        emb = load_embeddings(args.embeddings)
    else:
        model = model_from_sections(container.unpack(data))
    names = model.labels.names
    out = sys.stdout
    for doc_id, tokens in _iter_inputs(args, model.preprocess):
        if isinstance(tokens, Exception):
            out.write(json.dumps({"id": doc_id, "error": str(tokens)}) + "\n")
            continue
        try:
            probs = head.predict_proba(tokens, emb[doc_id]) if fused else model.predict_proba(tokens)
        except DataError as exc:
            out.write(json.dumps({"id": doc_id, "error": str(exc)}) + "\n")
            continue
        best = int(probs.argmax())
        out.write(json.dumps({"id": doc_id, "label": names[best],
                              "probabilities": {n: float(p) for n, p in zip(names, probs)}},
                             ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_evaluate(args):
    emb = load_embeddings(args.embeddings) if args.embeddings else None
    entries = []
    reference = None
    for path in args.model:
        data = _read_bytes(path)
        if _is_fused(data):
            head = load_fused(data)
            if emb is None:
                raise ConfigError(f"{path} has a fusion head: --embeddings is required")
            entries.append((path, head.base, lambda d, h=head: h.predict_label(d.tokens, emb[d.doc_id])))
        else:
            m = load_model(data)
            entries.append((path, m, lambda d, m=m: m.predict_label(d.tokens)))
        if reference is None:
            reference = entries[-1][1]
        elif reference.labels.names != entries[-1][1].labels.names:
            raise ConfigError("models disagree on their label sets")
    corpus = _maybe_split(_read_corpus(args, reference.preprocess, reference.labels.names), args, "test")
    positive = "macro" if args.positive == "macro" else reference.labels.id_of(args.positive)
    seen = {}
    models = []
    for path, m, fn in entries:
        name = Path(path).stem
        seen[name] = seen.get(name, 0) + 1
        if seen[name] > 1:
            name = f"{name}#{seen[name]}"
        if m.preprocess != reference.preprocess:
            # each model sees the text tokenised its own way
            records = {str(r.row_index): r.content for r in load_dataset(args.data, _schema(args))}
            fn = _retokenizing(fn, m.preprocess, records)
        models.append((name, fn))
    table = compare(models, corpus, positive)
    rendered = table.render(args.format)
    sys.stdout.write(rendered)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    if all(r.report is None for r in table.rows):
        return EXIT_DATA
    return EXIT_OK


def _retokenizing(fn, config, raw_by_id):
    def wrapped(doc):
        return fn(Document(preprocess(raw_by_id[doc.doc_id], config), doc.label, doc.doc_id))

    return wrapped


def cmd_features(args):
    corpus = _read_corpus(args, _preprocess_config(args))
    scores = select_features(corpus, args.method, args.k, args.min_df, _label_id(corpus.labels, args.label))
    fh = _open_out(args.out)
    try:
        write_scores_csv(scores, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_keywords(args):
    corpus = _read_corpus(args, _preprocess_config(args))
    lexicon = PosLexicon.load(args.lexicon) if args.lexicon else PosLexicon()
    scores = extract_keywords(corpus, corpus.labels.id_of(args.label), args.k, lexicon)
    fh = _open_out(args.out)
    try:
        write_keywords_csv(scores, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_lm(args):
    corpus = _read_corpus(args, _preprocess_config(args))
    if args.label is not None:
        label = corpus.labels.id_of(args.label)
        corpus = corpus.with_documents([d for d in corpus if d.label == label])
    model = train_lm(corpus, args.lm_order, args.smoothing, args.min_count)
    Path(args.out).write_bytes(save_lm(model))
    return EXIT_OK


def cmd_rules(args):
    rules = load_rules(args.rules)
    violent = load_lm(_read_bytes(args.violent_lm))
    benign = load_lm(_read_bytes(args.benign_lm))
    config = _preprocess_config(args)
    out = sys.stdout
    for i, (doc_id, tokens) in enumerate(_iter_inputs(args, config)):
        if isinstance(tokens, Exception):
            out.write(json.dumps({"doc": doc_id, "error": str(tokens)}) + "\n")
            continue
        matches = match_rules(rules, tokens, i)
        kept = set(constrain_with_lm(matches, violent, benign, args.threshold))
        for m in matches:
            out.write(json.dumps({
                "doc": doc_id, "rule": m.rule_id, "start": m.start, "end": m.end, "tokens": list(m.tokens),
                "score": match_score(m, violent, benign), "status": "kept" if m in kept else "dropped",
            }, ensure_ascii=False) + "\n")
    return EXIT_OK


def cmd_fuse(args):
    base = load_model(_read_bytes(args.model))
    emb = load_embeddings(args.embeddings)
    corpus = _maybe_split(_read_corpus(args, base.preprocess, base.labels.names), args, "train")
    started = time.perf_counter()
    head, objective_log = train_fused(base, emb, corpus, args.lr, args.epochs, args.seed)
    wall = time.perf_counter() - started
    blob = save_fused(head)
    Path(args.out).write_bytes(blob)
    _write_manifest(args.manifest or args.out + ".manifest.json", {
        "command": "fuse", "config": _config_of(args), "seed": args.seed,
        "objective_log": objective_log, "wall_time_s": wall, "n_documents": len(corpus),
        "scales": [head.scale_base, head.scale_ext], "model_sha256": hashlib.sha256(blob).hexdigest(),
    })
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_data(p, required=True):
    p.add_argument("--data", required=required, help="input CSV (or text file, one document per line)")
    p.add_argument("--content-column", default="Content", help="CSV column holding the text")
    p.add_argument("--label-column", default="Label", help="CSV column holding the label")


def _add_preprocess(p):
    p.add_argument("--stopwords", default=None, help="stopword file, one token per line")
    p.add_argument("--no-lowercase", action="store_true", help="keep letter case")
    p.add_argument("--keep-emoticons", action="store_true", help="do not strip emoji codepoints")


def _add_common(p):
    p.add_argument("--config", default=None, help="JSON config or run manifest supplying flag defaults")
    p.add_argument("--seed", type=int, default=0, help="global random seed")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="vtdetect", description="Violent-text detection toolkit.", formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train the fastText-style classifier", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    _add_preprocess(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--dim", type=int, default=100, help="embedding dimension")
    p.add_argument("--lr", type=float, default=0.1, help="initial learning rate")
    p.add_argument("--epochs", type=int, default=5, help="training epochs")
    p.add_argument("--min-count", type=int, default=5, help="minimum token frequency")
    p.add_argument("--ngrams", type=_ngram_range, default=(2, 2), help="word n-gram range 'lo,hi' (hi<lo disables)")
    p.add_argument("--buckets", type=int, default=2_000_000, help="n-gram hash buckets")
    p.add_argument("--mask-rate", type=float, default=0.15, help="masking rate for augmentation copies")
    p.add_argument("--copies", type=int, default=0, help="masked copies per training document")
    p.add_argument("--test-fraction", type=float, default=0.0, help="hold out this stratified fraction (0: none)")
    p.add_argument("--workers", type=int, default=1, help="training threads (>1 is not reproducible)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label documents with a trained model", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--data", default="-", help="CSV, or text with one document per line ('-' = stdin)")
    p.add_argument("--content-column", default="Content", help="CSV column holding the text")
    p.add_argument("--label-column", default="Label", help="CSV column holding the label")
    p.add_argument("--embeddings", default=None, help="external embeddings (fused models only)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="compare models on a labelled test set", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    p.add_argument("--model", action="append", required=True, help="model file (repeatable)")
    p.add_argument("--embeddings", default=None, help="external embeddings for fused models")
    p.add_argument("--test-fraction", type=float, default=0.0, help="evaluate on this held-out split (0: whole file)")
    p.add_argument("--positive", default="1", help="positive label name, or 'macro'")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text", help="report format")
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("features", help="rank terms by a feature-selection statistic", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    _add_preprocess(p)
    p.add_argument("--method", default="chi2", help="df, mi, mi_counts, ig or chi2")
    p.add_argument("--k", type=int, default=50, help="number of terms")
    p.add_argument("--min-df", type=int, default=1, help="minimum document frequency")
    p.add_argument("--label", default=None, help="class for MI/CHI2 (default: max over classes)")
    p.add_argument("--out", default=None, help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("keywords", help="extract chi2-FPN keywords for a class", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    _add_preprocess(p)
    p.add_argument("--lexicon", default=None, help="POS lexicon 'token<TAB>tag'")
    p.add_argument("--label", default="1", help="class to extract keywords for")
    p.add_argument("--k", type=int, default=50, help="number of keywords")
    p.add_argument("--out", default=None, help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_keywords)

    p = sub.add_parser("lm", help="train an n-gram language model", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    _add_preprocess(p)
    p.add_argument("--label", default=None, help="train only on documents of this class")
    p.add_argument("--lm-order", type=int, default=2, help="n-gram order (2..4)")
    p.add_argument("--smoothing", type=float, default=0.1, help="add-k smoothing constant")
    p.add_argument("--min-count", type=int, default=1, help="tokens rarer than this become UNK")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_lm)

    p = sub.add_parser("rules", help="apply rules and filter hits with two language models", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    _add_preprocess(p)
    p.add_argument("--rules", required=True, help="rule file 'id<TAB>slot;slot'")
    p.add_argument("--violent-lm", required=True, help="language model of violent text")
    p.add_argument("--benign-lm", required=True, help="language model of benign text")
    p.add_argument("--threshold", type=float, default=0.0, help="minimum per-token log-likelihood ratio")
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("fuse", help="train a fusion head over external embeddings", formatter_class=fmt)
    _add_common(p)
    _add_data(p)
    p.add_argument("--model", required=True, help="trained base model")
    p.add_argument("--embeddings", required=True, help="external document embeddings 'N e' file")
    p.add_argument("--out", required=True, help="fused model file to write")
    p.add_argument("--manifest", default=None, help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--lr", type=float, default=0.1, help="initial learning rate")
    p.add_argument("--epochs", type=int, default=5, help="training epochs")
    p.add_argument("--test-fraction", type=float, default=0.0, help="train on the complementary split")
    p.set_defaults(func=cmd_fuse)

    parser._subparsers_by_name = sub.choices
    return parser


def _config_path(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    return known.config


def _apply_config(parser, argv, path):
    """Install a JSON config (or a run manifest's ``config``) as flag defaults."""
    commands = parser._subparsers_by_name
    command = next((a for a in argv if a in commands), None)
    if command is None:
        return
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if isinstance(cfg.get("config"), dict):
        cfg = cfg["config"]
    subparser = commands[command]
    known = {a.dest for a in subparser._actions} - {"help", "config"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    if isinstance(cfg.get("ngrams"), list):
        cfg["ngrams"] = tuple(cfg["ngrams"])
    # config values replace defaults, so explicit flags still win
    for action in subparser._actions:
        if action.dest in cfg:
            action.required = False
    subparser.set_defaults(**cfg)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        path = _config_path(argv)
        if path:
            _apply_config(parser, argv, path)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
