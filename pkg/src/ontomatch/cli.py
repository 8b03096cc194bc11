"""Command-line interface.

Subcommands: derive, enrich, train, align, evaluate. Exit codes: 0 on
success, 1 on validation errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset as ds
from . import kb
from .embeddings import EmbeddingTable
from .enrich import (
    ContextCorpus,
    FixtureDefinitionSource,
    LiveDefinitionSource,
    attach_contexts,
    enrich_definitions,
)
from .errors import OntomatchError, ValidationError
from .features import PairFeaturizer
from .lr import LogisticRegressionMatcher
from .pipeline import AlignConfig, align, evaluate
from .scorer import NeuralMatcher


def _examples_to_xy(examples, source, target):
    pairs = []
    for ex in examples:
        if ex.source_id not in source:
            raise ValidationError(f"example references unknown source id {ex.source_id!r}")
        if ex.target_id not in target:
            raise ValidationError(f"example references unknown target id {ex.target_id!r}")
        pairs.append((source[ex.source_id], target[ex.target_id]))
    return pairs, [ex.label for ex in examples]


def cmd_derive(args) -> int:
    source = kb.load_kb(args.source)
    target = kb.load_kb(args.target)
    table = kb.load_reference(args.table)
    examples = ds.derive_examples(table, source, target, seed=args.seed, k=args.k)
    splits = ds.split(examples, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds.save_examples(examples, out_dir / "labeled.tsv")
    ds.save_examples(splits.train, out_dir / "train.tsv")
    ds.save_examples(splits.dev, out_dir / "dev.tsv")
    ds.save_examples(splits.test, out_dir / "test.tsv")
    counts = {
        "total": len(examples),
        "positives": sum(1 for e in examples if e.label == 1),
        "train": len(splits.train),
        "dev": len(splits.dev),
        "test": len(splits.test),
    }
    print(json.dumps(counts))
    return 0


def _definition_source(args):
    if args.definitions:
        return FixtureDefinitionSource.from_file(args.definitions)
    return LiveDefinitionSource()


def cmd_enrich(args) -> int:
    ontology = kb.load_kb(args.kb)
    report = None
    if args.definitions or args.live:
        ontology, report = enrich_definitions(ontology, _definition_source(args))
    if args.contexts:
        corpus = ContextCorpus.from_file(args.contexts)
        ontology = attach_contexts(
            ontology, corpus, max_contexts=args.max_contexts, seed=args.seed
        )
    kb.save_kb(ontology, args.out)
    print(json.dumps(report.as_dict() if report else {}))
    return 0


def cmd_train(args) -> int:
    source = kb.load_kb(args.source)
    target = kb.load_kb(args.target)
    train_examples = ds.load_examples(args.train)
    X_train, y_train = _examples_to_xy(train_examples, source, target)
    if args.model == "lr":
        features = PairFeaturizer().transform(X_train)
        model = LogisticRegressionMatcher(l2_lambda=args.l2_lambda)
        model.fit(features, y_train)
        model.save(args.out)
    else:
        if not args.embeddings:
            raise ValidationError("--embeddings is required for --model nn")
        X_dev = y_dev = None
        if args.dev:
            dev_examples = ds.load_examples(args.dev)
            X_dev, y_dev = _examples_to_xy(dev_examples, source, target)
        model = NeuralMatcher(
            embeddings=EmbeddingTable.load(args.embeddings),
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            max_epochs=args.epochs,
            patience=args.patience,
            seed=args.seed,
            use_features=not args.no_features,
        )
        model.fit(X_train, y_train, X_dev, y_dev)
        model.save(args.out)
    print(json.dumps({"model": args.model, "out": str(args.out)}))
    return 0


def load_matcher(path):
    """Model files are self-describing: zip archive = neural, JSON = LR."""
    import zipfile

    if zipfile.is_zipfile(path):
        return NeuralMatcher.load(path)
    return LogisticRegressionMatcher.load(path)


def cmd_align(args) -> int:
    source = kb.load_kb(args.source)
    target = kb.load_kb(args.target)
    if args.use_external_defs:
        definition_source = _definition_source(args)
        source, _ = enrich_definitions(source, definition_source)
        target, _ = enrich_definitions(target, definition_source)
    if args.use_contexts:
        if not args.contexts:
            raise ValidationError("--use-contexts requires --contexts")
        corpus = ContextCorpus.from_file(args.contexts)
        source = attach_contexts(source, corpus, seed=args.seed)
        target = attach_contexts(target, corpus, seed=args.seed)
    model = load_matcher(args.model)
    config = AlignConfig(
        k=args.k, threshold=args.threshold, one_to_one=not args.no_one_to_one
    )
    alignments = align(source, target, model, config)
    kb.save_alignment(alignments, args.out)
    print(json.dumps({"alignments": len(alignments), "out": str(args.out)}))
    return 0


def cmd_evaluate(args) -> int:
    predicted = kb.load_alignment(args.predicted)
    reference = kb.load_reference(args.reference)
    metrics = evaluate(predicted, reference)
    print(json.dumps(metrics.as_dict()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontomatch", description="Ontology alignment toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="build labeled examples from an alignment table")
    p.add_argument("--table", required=True, help="reference alignment TSV")
    p.add_argument("--source", required=True, help="source KB (JSON lines)")
    p.add_argument("--target", required=True, help="target KB (JSON lines)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None, help="candidate list size")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("enrich", help="fill definitions and attach contexts")
    p.add_argument("--kb", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--definitions", help="definition fixture (JSON lines)")
    p.add_argument("--live", action="store_true", help="use the live endpoint")
    p.add_argument("--contexts", help="context corpus (JSON lines)")
    p.add_argument("--max-contexts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("train", help="train a matcher on labeled examples")
    p.add_argument("--model", choices=("lr", "nn"), required=True)
    p.add_argument("--train", required=True, help="training examples TSV")
    p.add_argument("--dev", help="development examples TSV")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--embeddings", help="pretrained embedding text file")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-features", action="store_true")
    p.add_argument("--l2-lambda", type=float, default=1e-4)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("align", help="align two ontologies with a trained model")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--no-one-to-one", action="store_true")
    p.add_argument("--use-external-defs", action="store_true")
    p.add_argument("--use-contexts", action="store_true")
    p.add_argument("--definitions", help="definition fixture for --use-external-defs")
    p.add_argument("--contexts", help="context corpus for --use-contexts")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("evaluate", help="precision/recall/F1 against a reference")
    p.add_argument("--predicted", required=True, help="alignment TSV")
    p.add_argument("--reference", required=True, help="reference TSV")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OntomatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
