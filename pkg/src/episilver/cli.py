"""Command-line interface.

Subcommands mirror the pipeline stages so each is independently
runnable: synth, ingest, label, train, eval, report, and run (the full
pipeline). Exit codes: 0 success, 2 configuration error, 3 data error,
4 training error. Stage failures emit one machine-readable JSON line
on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import evaluation, features, models
from .corpus import NormalizedDocument, ingest_files
from .errors import ConfigError, DataError, PipelineError
from .labeling import (
    EpidemicClass,
    LabeledExample,
    build_silver_dataset,
    default_ruleset,
    load_ruleset,
    match_classes,
    match_rules,
    read_dataset_tsv,
    resolve_label,
    sample_negatives,
    write_dataset_tsv,
)
from .pipeline import (
    DEFAULT_CLASSES,
    MODEL_KINDS,
    PipelineConfig,
    derive_seed,
    run_pipeline,
)
from .synth import SynthSpec, write_corpus

DOCS_HEADER = "id\ttext"


def _parse_classes(spec: str) -> tuple[EpidemicClass, ...]:
    return tuple(EpidemicClass.from_label(t) for t in spec.split(",") if t.strip())


def _parse_counts(spec: str) -> dict[EpidemicClass, int]:
    counts: dict[EpidemicClass, int] = {}
    for item in spec.split(","):
        if not item.strip():
            continue
        try:
            name, value = item.split("=")
            counts[EpidemicClass.from_label(name)] = int(value)
        except ValueError:
            raise ConfigError(f"bad count entry {item!r}; expected class=count") from None
    if not counts:
        raise ConfigError("empty class counts")
    return counts


def _lang_arg(value: str) -> str | None:
    return None if value == "none" else value


def _ruleset_arg(path: str | None):
    return default_ruleset() if path is None else load_ruleset(path)


def _write_docs_tsv(docs: list[NormalizedDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DOCS_HEADER + "\n")
        for doc in docs:
            fh.write(f"{doc.id}\t{doc.text}\n")


def _read_docs_tsv(path: str) -> list[NormalizedDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != DOCS_HEADER:
            raise DataError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 fields")
            docs.append(NormalizedDocument(id=parts[0], text=parts[1]))
    return docs


def cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        class_counts=_parse_counts(args.counts),
        background_vocab=args.background_vocab,
        signal_vocab=args.signal_vocab,
        keyword_injection_prob=args.keyword_prob,
        noise_token_rate=args.noise_rate,
        noise_vocab=args.noise_vocab,
        retweet_rate=args.retweet_rate,
        duplicate_rate=args.duplicate_rate,
        url_rate=args.url_rate,
        emoji_rate=args.emoji_rate,
        non_english_rate=args.non_english_rate,
        seed=args.seed,
    )
    count = write_corpus(spec, args.out)
    print(f"wrote {count} records to {args.out}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    docs, stats = ingest_files(args.input, _lang_arg(args.lang), args.threads)
    _write_docs_tsv(docs, args.out)
    summary = json.dumps(stats.as_dict(), sort_keys=True)
    if args.stats:
        Path(args.stats).write_text(summary + "\n", encoding="utf-8")
    else:
        print(summary, file=sys.stderr)
    print(f"wrote {len(docs)} documents to {args.out}")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    ruleset = _ruleset_arg(args.ruleset)
    docs = _read_docs_tsv(args.input)
    included = set(_parse_classes(args.classes))
    positives: dict[EpidemicClass, list[LabeledExample]] = {
        cls: [] for cls in sorted(included)
    }
    pool = []
    for doc in docs:
        label = resolve_label(match_rules(ruleset, doc.text), args.policy)
        if label is None:
            if not match_classes(ruleset, doc.text):
                pool.append(doc)
        elif label in included:
            positives[label].append(
                LabeledExample(id=doc.id, text=doc.text, label=label)
            )
    n_needed = sum(len(v) for v in positives.values())
    negatives = sample_negatives(
        pool, ruleset, n_needed, derive_seed(args.seed, "negatives")
    )
    dataset = build_silver_dataset(positives, negatives)
    write_dataset_tsv(dataset, args.out)
    counts = {c.label: n for c, n in dataset.class_counts.items()}
    summary = json.dumps({"class_counts": counts, "total": dataset.total},
                         sort_keys=True)
    if args.stats:
        Path(args.stats).write_text(summary + "\n", encoding="utf-8")
    else:
        print(summary, file=sys.stderr)
    print(f"wrote {dataset.total} examples to {args.out}")
    return 0


def _load_split_features(args: argparse.Namespace):
    examples = read_dataset_tsv(args.dataset)
    if not examples:
        raise DataError(f"{args.dataset}: empty dataset")
    labels = [ex.label for ex in examples]
    split = models.stratified_split(
        labels, args.ratio, derive_seed(args.seed, "split")
    )
    return examples, labels, split


def cmd_train(args: argparse.Namespace) -> int:
    examples, labels, split = _load_split_features(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_texts = [examples[i].text for i in split.train]
    exclude = None
    if args.mask_keywords:
        ruleset = _ruleset_arg(args.ruleset)
        exclude = lambda token: bool(match_classes(ruleset, token))  # noqa: E731
    tfidf = features.fit_tfidf(train_texts, exclude=exclude)
    features.save_tfidf(tfidf, out_dir / "tfidf.json")
    checksum = features.idf_checksum(tfidf)
    X_train = [features.transform(tfidf, t) for t in train_texts]
    y_train = [labels[i] for i in split.train]
    kinds = MODEL_KINDS if args.model == "all" else (args.model,)
    for kind in kinds:
        if kind == "tree":
            model = models.train_decision_tree(
                X_train, y_train,
                models.TreeHyperparams(seed=derive_seed(args.seed, "tree")),
            )
        elif kind == "logistic":
            model = models.train_logistic(X_train, y_train)
        else:
            model = models.train_linear_svm(X_train, y_train)
        models.save_model(model, out_dir / f"model-{kind}.json", checksum)
        print(f"trained {kind} on {len(X_train)} examples -> model-{kind}.json")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    examples, labels, split = _load_split_features(args)
    tfidf = features.load_tfidf(args.tfidf)
    model, expected = models.load_model(args.model_file)
    actual = features.idf_checksum(tfidf)
    if expected != actual:
        raise DataError(
            f"model {args.model_file} was trained against a different "
            f"feature model (checksum {expected[:12]}.. != {actual[:12]}..)"
        )
    X_val = [features.transform(tfidf, examples[i].text) for i in split.validation]
    y_val = [labels[i] for i in split.validation]
    pred = models.predict(model, X_val)
    class_order = tuple(sorted(set(labels)))
    kind = getattr(model, "kind", "tree")
    report = evaluation.build_report(kind, y_val, pred, class_order)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = report.model_id
    (out_dir / f"report-{name}.tsv").write_bytes(
        evaluation.render_report(report, "tsv"))
    (out_dir / f"report-{name}.json").write_bytes(
        evaluation.render_report(report, "json"))
    (out_dir / f"confusion-{name}.csv").write_bytes(
        evaluation.render_confusion_csv(report))
    print(f"{name}: weighted_f1={report.weighted_f1:.4f} "
          f"accuracy={report.accuracy:.4f}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    report = evaluation.report_from_json(Path(args.report).read_bytes())
    if args.format == "confusion":
        sys.stdout.buffer.write(evaluation.render_confusion_csv(report))
    else:
        sys.stdout.buffer.write(evaluation.render_report(report, args.format))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        inputs=tuple(args.input),
        out_dir=args.out,
        ruleset_path=args.ruleset,
        included_classes=_parse_classes(args.classes),
        policy=args.policy,
        ratio=args.ratio,
        master_seed=args.seed,
        model_kinds=MODEL_KINDS if args.model == "all" else (args.model,),
        require_lang=_lang_arg(args.lang),
        mask_keywords=args.mask_keywords,
        threads=args.threads,
    )
    result = run_pipeline(config)
    for kind, report in result.reports.items():
        print(f"{kind}: weighted_f1={report.weighted_f1:.4f} "
              f"accuracy={report.accuracy:.4f}")
    print(f"artifacts in {result.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="episilver",
        description="Silver-standard epidemic tweet datasets and classical "
                    "text classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_classes = ",".join(c.label for c in DEFAULT_CLASSES)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--counts", required=True,
                   help="per-class counts, e.g. cholera=100,non_epidemic=200")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--background-vocab", type=int, default=500)
    p.add_argument("--signal-vocab", type=int, default=20)
    p.add_argument("--noise-vocab", type=int, default=10000)
    p.add_argument("--keyword-prob", type=float, default=0.3)
    p.add_argument("--noise-rate", type=float, default=0.0)
    p.add_argument("--retweet-rate", type=float, default=0.0)
    p.add_argument("--duplicate-rate", type=float, default=0.0)
    p.add_argument("--url-rate", type=float, default=0.2)
    p.add_argument("--emoji-rate", type=float, default=0.2)
    p.add_argument("--non-english-rate", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, filter, normalize, deduplicate")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lang", default="en", help='language code or "none"')
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--stats", help="write the ingest summary here instead of stderr")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="label documents and balance negatives")
    p.add_argument("--input", required=True, help="docs TSV from ingest")
    p.add_argument("--out", required=True)
    p.add_argument("--ruleset")
    p.add_argument("--classes", default=default_classes)
    p.add_argument("--policy", choices=("exclude", "priority"), default="exclude")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stats")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="split, fit features, train models")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", choices=MODEL_KINDS + ("all",), default="all")
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-keywords", action="store_true")
    p.add_argument("--ruleset")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on the validation split")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tfidf", required=True)
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render a stored report")
    p.add_argument("--report", required=True, help="report JSON file")
    p.add_argument("--format", choices=("tsv", "json", "confusion"), default="tsv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="full pipeline")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ruleset")
    p.add_argument("--classes", default=default_classes)
    p.add_argument("--policy", choices=("exclude", "priority"), default="exclude")
    p.add_argument("--ratio", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=MODEL_KINDS + ("all",), default="all")
    p.add_argument("--lang", default="en", help='language code or "none"')
    p.add_argument("--mask-keywords", action="store_true")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        record = {
            "stage": exc.stage or args.command,
            "error": type(exc).__name__,
            "message": str(exc),
        }
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
