"""Command-line interface.

Four subcommands: train-embeddings, train-classifier, eval-captions, and
nearest. Each accepts an optional flat key=value config file; precedence
is built-in defaults, then config file values, then explicit flags.
Unknown config keys are rejected.

Exit codes: 0 success, 1 domain error (readable files with bad content),
2 usage or I/O error (bad flags, unknown config keys, missing files).

Text outputs get a companion PNG figure (suppress with --no-figure):
train-embeddings writes `<out>.loss` and `<out>.loss.png` next to the
embedding file, train-classifier writes `<out>.acc` and `<out>.acc.png`
next to the checkpoint, and eval-captions writes `<report>.png` next to
the report.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import cbow, corpus, figures, huffman, metrics, textcnn


class UsageError(Exception):
    """Bad invocation or config file; maps to exit code 2."""


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (converter, default) per subcommand; None default means required
SCHEMAS = {
    "train-embeddings": {
        "corpus": (str, None),
        "out": (str, None),
        "dim": (int, 100),
        "window": (int, 5),
        "lr": (float, 0.025),
        "decay": (float, 0.85),
        "batch": (int, 64),
        "epochs": (int, 5),
        "min-count": (int, 5),
        "seed": (int, 1),
        "threads": (int, 1),
        "deterministic": (_parse_bool, False),
        "no-figure": (_parse_bool, False),
    },
    "train-classifier": {
        "embeddings": (str, None),
        "data": (str, None),
        "out": (str, None),
        "length": (int, 32),
        "kernel": (int, 3),
        "channels": (int, 16),
        "pool": (int, 2),
        "dropout": (float, 0.5),
        "classes": (int, 0),  # 0 means infer from the data
        "lr": (float, 0.05),
        "decay": (float, 0.85),
        "batch": (int, 64),
        "epochs": (int, 10),
        "seed": (int, 1),
        "unfreeze-embeddings": (_parse_bool, False),
        "no-figure": (_parse_bool, False),
    },
    "eval-captions": {
        "captions": (str, None),
        "report": (str, None),
        "smooth-bleu": (_parse_bool, False),
        "no-figure": (_parse_bool, False),
    },
    "nearest": {
        "embeddings": (str, None),
        "word": (str, None),
        "k": (int, 10),
    },
}


def read_config(path, schema):
    """Flat key=value lines; blank lines and # comments allowed."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in schema:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        converter = schema[key][0]
        try:
            values[key] = converter(raw.strip())
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def resolve(args, command):
    """Merge defaults, config file, and explicit flags into one dict."""
    schema = SCHEMAS[command]
    settings = {key: default for key, (_, default) in schema.items()}
    if args.config is not None:
        settings.update(read_config(args.config, schema))
    for key in schema:
        flag_value = getattr(args, key.replace("-", "_"))
        if flag_value is not None:
            settings[key] = flag_value
    missing = [key for key, value in settings.items() if value is None]
    if missing:
        raise UsageError(
            "missing required settings: " + ", ".join(sorted(missing)))
    return settings


def _require_readable(path, what):
    if not os.path.isfile(path):
        raise UsageError(f"{what} file not found: {path}")


def _refuse_clobber(out_path, input_paths):
    out = os.path.abspath(out_path)
    for p in input_paths:
        if os.path.abspath(p) == out:
            raise UsageError(f"output path {out_path} would overwrite input {p}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_train_embeddings(settings) -> int:
    _require_readable(settings["corpus"], "corpus")
    _refuse_clobber(settings["out"], [settings["corpus"]])
    sentences = corpus.read_corpus(settings["corpus"])
    vocab = corpus.build_vocabulary(sentences, min_count=settings["min-count"])
    samples = []
    for sentence in sentences:
        samples.extend(corpus.extract_contexts(vocab.encode(sentence),
                                               settings["window"]))
    if not samples:
        raise corpus.EmptyVocabularyError(
            "corpus produced no context windows after min-count filtering")
    config = cbow.TrainingConfig(
        dim=settings["dim"],
        half_window=settings["window"],
        kappa0=settings["lr"],
        decay=settings["decay"],
        batch=settings["batch"],
        epochs=settings["epochs"],
        min_count=settings["min-count"],
        seed=settings["seed"],
        deterministic=settings["deterministic"],
    )
    tree = huffman.build_huffman(vocab)
    state, log = cbow.train(samples, vocab, tree, config,
                            threads=settings["threads"])
    cbow.save_embeddings(settings["out"], vocab, state.W)
    loss_path = settings["out"] + ".loss"
    cbow.write_loss_log(loss_path, log)
    if not settings["no-figure"]:
        figures.save_loss_curve(log, loss_path + ".png")
    print(f"trained {len(vocab)} words, dim {settings['dim']}, "
          f"{settings['epochs']} epochs; final loss {log[-1].loss:.6f}")
    print(f"wrote {settings['out']} and {loss_path}")
    return 0


def cmd_train_classifier(settings) -> int:
    _require_readable(settings["embeddings"], "embeddings")
    _require_readable(settings["data"], "dataset")
    _refuse_clobber(settings["out"], [settings["embeddings"], settings["data"]])
    surfaces, W = cbow.load_embeddings(settings["embeddings"])
    vocab = corpus.build_vocabulary([surfaces], min_count=1)
    # embedding files list one distinct surface per line in id order, so
    # rebuilding with count 1 each preserves the original ids
    if [vocab.surface_of(i) for i in range(len(vocab))] != surfaces:
        raise ValueError(f"duplicate surfaces in {settings['embeddings']}")
    dataset = textcnn.load_dataset(settings["data"], vocab, settings["length"])
    labels = {s.label for s in dataset}
    classes = settings["classes"] or max(labels) + 1
    if classes < 2:
        raise ValueError("need at least two classes; labels are all equal")
    model = textcnn.TextCnn(
        embeddings=W,
        classes=classes,
        length=settings["length"],
        kernel=settings["kernel"],
        channels=settings["channels"],
        pool=settings["pool"],
        dropout=settings["dropout"],
        frozen_embeddings=not settings["unfreeze-embeddings"],
        seed=settings["seed"],
    )
    model, log = textcnn.train_classifier(
        dataset, model,
        epochs=settings["epochs"],
        batch=settings["batch"],
        kappa0=settings["lr"],
        decay=settings["decay"],
        seed=settings["seed"],
    )
    textcnn.save_checkpoint(settings["out"], model, surfaces)
    acc_path = settings["out"] + ".acc"
    textcnn.write_accuracy_log(acc_path, log)
    if not settings["no-figure"]:
        figures.save_accuracy_curve(log, acc_path + ".png")
    print(f"trained classifier on {len(dataset)} sequences, {classes} classes; "
          f"final train accuracy {log[-1].accuracy:.4f}")
    print(f"wrote {settings['out']} and {acc_path}")
    return 0


def cmd_eval_captions(settings) -> int:
    _require_readable(settings["captions"], "captions")
    _refuse_clobber(settings["report"], [settings["captions"]])
    records = metrics.load_captions(settings["captions"])
    report = metrics.evaluate(records, smooth_bleu=settings["smooth-bleu"])
    metrics.write_report(settings["report"], report)
    if not settings["no-figure"]:
        figures.save_metric_bars(report, settings["report"] + ".png")
    print(metrics.render_report(report), end="")
    print(f"wrote {settings['report']}")
    return 0


def cmd_nearest(settings) -> int:
    _require_readable(settings["embeddings"], "embeddings")
    surfaces, W = cbow.load_embeddings(settings["embeddings"])
    if settings["word"] not in surfaces:
        raise ValueError(f"word {settings['word']!r} not in the embedding file")
    if settings["k"] < 1:
        raise UsageError("k must be positive")
    k = settings["k"]
    if k > len(surfaces) - 1:
        print(f"warning: k={k} clamped to {len(surfaces) - 1}", file=sys.stderr)
        k = len(surfaces) - 1
    state = cbow.TrainerState(W=W, beta=W[:0], kappa=0.0)
    word_id = surfaces.index(settings["word"])
    for neighbor_id, similarity in cbow.nearest_neighbors(state, word_id, k):
        print(f"{surfaces[neighbor_id]} {similarity:.4f}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textvec",
        description="Train word embeddings, train a convolutional text "
                    "classifier on them, and score candidate captions.")
    sub = parser.add_subparsers(dest="command", required=True)

    te = sub.add_parser("train-embeddings",
                        help="train CBOW embeddings with hierarchical softmax")
    te.add_argument("--corpus", help="text corpus, one sentence per line")
    te.add_argument("--out", help="embedding output file")
    te.add_argument("--dim", type=int, help="embedding dimension")
    te.add_argument("--window", type=int, help="context half-window")
    te.add_argument("--lr", type=float, help="initial learning rate")
    te.add_argument("--decay", type=float, help="per-epoch rate multiplier")
    te.add_argument("--batch", type=int, help="batch size")
    te.add_argument("--epochs", type=int, help="training epochs")
    te.add_argument("--min-count", type=int, help="minimum word frequency")
    te.add_argument("--seed", type=int, help="random seed")
    te.add_argument("--threads", type=int, help="trainer thread count")
    te.add_argument("--deterministic", action="store_const", const=True,
                    default=None, help="force the bit-reproducible path")
    te.add_argument("--no-figure", action="store_const", const=True,
                    default=None, help="skip the loss-curve PNG")
    te.set_defaults(run=cmd_train_embeddings)

    tc = sub.add_parser("train-classifier",
                        help="train the convolutional classifier")
    tc.add_argument("--embeddings", help="embedding file from train-embeddings")
    tc.add_argument("--data", help="dataset of <label><TAB><sentence> lines")
    tc.add_argument("--out", help="checkpoint output file")
    tc.add_argument("--length", type=int, help="padded sequence length")
    tc.add_argument("--kernel", type=int, help="convolution kernel width")
    tc.add_argument("--channels", type=int, help="convolution channels")
    tc.add_argument("--pool", type=int, help="max-pool width")
    tc.add_argument("--dropout", type=float, help="dropout rate")
    tc.add_argument("--classes", type=int,
                    help="class count (default: infer from labels)")
    tc.add_argument("--lr", type=float, help="initial learning rate")
    tc.add_argument("--decay", type=float, help="per-epoch rate multiplier")
    tc.add_argument("--batch", type=int, help="batch size")
    tc.add_argument("--epochs", type=int, help="training epochs")
    tc.add_argument("--seed", type=int, help="random seed")
    tc.add_argument("--unfreeze-embeddings", action="store_const", const=True,
                    default=None, help="also train the embedding rows")
    tc.add_argument("--no-figure", action="store_const", const=True,
                    default=None, help="skip the accuracy-curve PNG")
    tc.set_defaults(run=cmd_train_classifier)

    ec = sub.add_parser("eval-captions",
                        help="score candidate captions against references")
    ec.add_argument("--captions", help="JSON records with id, refs, candidate")
    ec.add_argument("--report", help="report output file")
    ec.add_argument("--smooth-bleu", action="store_const", const=True,
                    default=None, help="epsilon-smooth zero precisions")
    ec.add_argument("--no-figure", action="store_const", const=True,
                    default=None, help="skip the metric-bars PNG")
    ec.set_defaults(run=cmd_eval_captions)

    ne = sub.add_parser("nearest", help="print nearest neighbors of a word")
    ne.add_argument("--embeddings", help="embedding file")
    ne.add_argument("--word", help="query word")
    ne.add_argument("--k", type=int, help="neighbor count")
    ne.set_defaults(run=cmd_nearest)

    for p in (te, tc, ec, ne):
        p.add_argument("--config", default=None,
                       help="flat key=value config file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve(args, args.command)
        return args.run(settings)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
