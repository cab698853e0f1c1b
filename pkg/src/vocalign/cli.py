"""Command-line pipeline harness.

Subcommands mirror the pipeline stages: ingest, gen-pairs, extract,
train, eval, cross-eval, report. Every artifact-producing command runs
inside a run directory that receives the exact resolved config
(config.json) and an append-only provenance log (manifest.jsonl), so
any run can be replayed exactly from its manifest. Commands refuse to
overwrite existing artifacts unless --force is given.

Exit codes: 0 success; 2 validation failure (bad config, missing or
malformed inputs, refusing to overwrite); 3 runtime failure (training
or encoder errors).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .atoms import ingest, validate
from .crossenc import score_pairs, write_score_dump
from .embeddings import load_static_table, random_table, extract_contextual_table, write_table
from .errors import ConfigError, EncoderError, TrainingError, VocalignError
from .expconfig import ExperimentConfig, load_config
from .hfenc import load_contextual_encoder, load_pair_classifier
from .lexsim import build_index, word_tokens
from .manifest import append_entry
from .metrics import MetricsRow, confusion, metrics, render
from .pairs import (
    NEGATIVE_TAGS,
    generate_negatives,
    generate_positives,
    read_pairs,
    split_train_test,
    write_pairs,
)
from .siamese import build, load_checkpoint, predict, train

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _require_file(path, role: str) -> Path:
    if path is None:
        raise ConfigError(f"no {role} configured")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{role} not found: {p}")
    return p


def _fresh(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise ConfigError(f"refusing to overwrite {path}; pass --force")
    return path


def _run_dir(config: ExperimentConfig) -> Path:
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json(), encoding="utf-8")
    return out


def _tokenizer_for(config: ExperimentConfig):
    locator = config["siamese_tokenizer"]
    if locator == "word":
        return word_tokens, "word"
    return load_contextual_encoder(config.resolve_encoder("siamese_tokenizer")).tokenize, locator


def _load_store(config: ExperimentConfig):
    return ingest(_require_file(config.get("atom_file"), "atom file"))


def cmd_ingest(args) -> int:
    config = load_config(args.config, atom_file=args.atoms, out_dir=args.out, seed=args.seed)
    atom_path = _require_file(config.get("atom_file"), "atom file")
    store = ingest(atom_path)
    report = validate(store)
    print(f"atoms: {report.atoms}")
    print(f"concepts: {report.concepts}")
    print(f"sources: {report.sources}")
    print(f"singleton concepts: {report.singleton_concepts}")
    for src, count in report.per_source.items():
        print(f"  {src}: {count}")
    if args.out or args.config:
        run_dir = _run_dir(config)
        summary = run_dir / "ingest_summary.json"
        summary.write_text(
            json.dumps(
                {
                    "atoms": report.atoms,
                    "concepts": report.concepts,
                    "sources": report.sources,
                    "singleton_concepts": report.singleton_concepts,
                    "per_source": report.per_source,
                },
                sort_keys=True,
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
        append_entry(
            run_dir,
            "ingest",
            config.values,
            config["seed"],
            __version__,
            inputs={"atoms": atom_path},
            outputs={"summary": summary},
        )
    return EXIT_OK


def cmd_gen_pairs(args) -> int:
    config = load_config(args.config, out_dir=args.out, seed=args.seed)
    atom_path = _require_file(config.get("atom_file"), "atom file")
    run_dir = _run_dir(config)
    train_path = _fresh(run_dir / "pairs_train.tsv", args.force)
    test_path = _fresh(run_dir / "pairs_test.tsv", args.force)

    store = ingest(atom_path)
    spec = config.dataset_spec()
    positives = generate_positives(store, spec.cross_source_only)
    if not positives:
        raise ConfigError("no positive pairs exist in this store")
    index = build_index(store)
    try:
        result = generate_negatives(store, index, spec, len(positives))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    train_pairs, test_pairs = split_train_test(positives | set(result.pairs), spec)
    write_pairs(train_pairs, store, train_path)
    write_pairs(test_pairs, store, test_path)

    print(f"positives: {len(positives)}")
    print(f"negatives: {len(result.pairs)} (requested {result.requested})")
    for tag in NEGATIVE_TAGS:
        print(f"  {tag}: {result.counts[tag]} (shortfall {result.shortfall[tag]})")
    print(f"train pairs: {len(train_pairs)} -> {train_path}")
    print(f"test pairs: {len(test_pairs)} -> {test_path}")
    append_entry(
        run_dir,
        "gen-pairs",
        config.values,
        config["seed"],
        __version__,
        inputs={"atoms": atom_path},
        outputs={"pairs_train": train_path, "pairs_test": test_path},
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    config = load_config(args.config, out_dir=args.out, seed=args.seed)
    atom_path = _require_file(config.get("atom_file"), "atom file")
    run_dir = _run_dir(config)
    vectors_path = _fresh(run_dir / "vectors.txt", args.force)

    store = ingest(atom_path)
    corpus_mode = config["extract_corpus"]
    if corpus_mode == "all":
        corpus = [atom.string for atom in store]
    elif corpus_mode == "train":
        train_file = _require_file(run_dir / "pairs_train.tsv", "pairs_train.tsv")
        used = {aui for pair in read_pairs(train_file) for aui in (pair.a, pair.b)}
        corpus = [atom.string for atom in store if atom.aui in used]
    else:
        raise ConfigError(f"extract_corpus must be 'all' or 'train', got {corpus_mode!r}")
    encoder = load_contextual_encoder(config.resolve_encoder("encoder_model"))
    table = extract_contextual_table(
        encoder, corpus, config.strategy(), max_tokens=config["max_tokens"]
    )
    write_table(table, vectors_path)
    print(
        f"extracted {len(table)} token vectors (dim {table.dim}, "
        f"{config['occurrence']}/{config['layer_pool']}) -> {vectors_path}"
    )
    append_entry(
        run_dir,
        "extract",
        config.values,
        config["seed"],
        __version__,
        inputs={"atoms": atom_path},
        outputs={"vectors": vectors_path},
    )
    return EXIT_OK


def _build_table(config: ExperimentConfig, store, tokenizer):
    vector_file = config.get("vector_file")
    if vector_file:
        table = load_static_table(_require_file(vector_file, "vector file"))
        if table.dim != config["embed_dim"]:
            raise ConfigError(
                f"vector file dim {table.dim} != configured embed_dim {config['embed_dim']}"
            )
        return table, Path(vector_file)
    tokens = {t for atom in store for t in tokenizer(atom.string)}
    return random_table(tokens, config["embed_dim"], config["seed"]), None


def cmd_train(args) -> int:
    config = load_config(args.config, out_dir=args.out, seed=args.seed)
    atom_path = _require_file(config.get("atom_file"), "atom file")
    run_dir = _run_dir(config)
    train_file = _require_file(run_dir / "pairs_train.tsv", "pairs_train.tsv")
    test_file = run_dir / "pairs_test.tsv"
    checkpoint = run_dir / "model.pt"
    if checkpoint.exists() and not (args.resume or args.force):
        raise ConfigError(f"refusing to overwrite {checkpoint}; pass --force or --resume")

    store = ingest(atom_path)
    tokenizer, tokenizer_id = _tokenizer_for(config)
    table, vector_path = _build_table(config, store, tokenizer)
    model = build(config.siamese_config(), table, tokenizer, tokenizer_id=tokenizer_id)
    train_pairs = read_pairs(train_file)
    valid_pairs = read_pairs(test_file) if test_file.is_file() else []
    report = train(
        model,
        train_pairs,
        valid_pairs,
        store,
        checkpoint=checkpoint,
        resume=args.resume,
    )
    report_path = run_dir / "train_report.json"
    report_path.write_text(
        json.dumps(
            {
                "losses": report.losses,
                "val_metrics": report.val_metrics,
                "wall_time": report.wall_time,
                "weights_checksum": report.weights_checksum,
                "epochs_done": report.epochs_done,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    first = f"{report.losses[0]:.6f}" if report.losses else "n/a"
    last = f"{report.losses[-1]:.6f}" if report.losses else "n/a"
    print(f"trained {report.epochs_done} epochs (loss {first} -> {last}) in {report.wall_time:.1f}s")
    print(f"checkpoint: {checkpoint}")
    inputs = {"atoms": atom_path, "pairs_train": train_file}
    if vector_path is not None:
        inputs["vectors"] = vector_path
    append_entry(
        run_dir,
        "train",
        config.values,
        config["seed"],
        __version__,
        inputs=inputs,
        outputs={"checkpoint": checkpoint, "train_report": report_path},
    )
    return EXIT_OK


def _model_label(config: ExperimentConfig) -> str:
    label = "siamese+attn" if config["use_attention"] else "siamese"
    if config.get("vector_file"):
        label += "[static]"
    elif config["siamese_tokenizer"] != "word":
        label += "[contextual]"
    return label


def cmd_eval(args) -> int:
    # the trained checkpoint is tied to the config-file hyperparameters;
    # --threshold only moves the decision cut, so it must not enter the
    # config used for the checkpoint compatibility check
    config = load_config(args.config, out_dir=args.out, seed=args.seed)
    threshold = args.threshold if args.threshold is not None else config["threshold"]
    atom_path = _require_file(config.get("atom_file"), "atom file")
    run_dir = _run_dir(config)
    test_file = _require_file(run_dir / "pairs_test.tsv", "pairs_test.tsv")
    checkpoint = _require_file(run_dir / "model.pt", "model checkpoint")
    csv_path = _fresh(run_dir / "metrics_siamese.csv", args.force)
    md_path = _fresh(run_dir / "metrics_siamese.md", args.force)
    scores_path = _fresh(run_dir / "scores_siamese.tsv", args.force)

    store = ingest(atom_path)
    tokenizer, _ = _tokenizer_for(config)
    model, _ = load_checkpoint(checkpoint, tokenizer, expect_config=config.siamese_config())
    pairs = sorted(read_pairs(test_file))
    scores, preds = predict(model, pairs, store, threshold)
    row = metrics(
        confusion(scores, [p.label for p in pairs], threshold),
        model=_model_label(config),
        config=f"seed={config['seed']} thr={threshold}",
        threshold=threshold,
    )
    csv_path.write_text(render([row], "csv"), encoding="utf-8")
    md_path.write_text(render([row], "markdown"), encoding="utf-8")
    with open(scores_path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write("aui1\taui2\tscore\tlabel\tpred\n")
        for pair, score, pred in zip(pairs, scores, preds):
            stream.write(f"{pair.a}\t{pair.b}\t{score!r}\t{pair.label}\t{pred}\n")
    print(render([row], "markdown"), end="")
    append_entry(
        run_dir,
        "eval",
        config.values,
        config["seed"],
        __version__,
        inputs={"atoms": atom_path, "pairs_test": test_file, "checkpoint": checkpoint},
        outputs={"metrics_csv": csv_path, "metrics_md": md_path, "scores": scores_path},
    )
    return EXIT_OK


def cmd_cross_eval(args) -> int:
    config = load_config(args.config, out_dir=args.out, seed=args.seed)
    threshold = args.threshold if args.threshold is not None else config["threshold"]
    atom_path = _require_file(config.get("atom_file"), "atom file")
    run_dir = _run_dir(config)
    test_file = _require_file(run_dir / "pairs_test.tsv", "pairs_test.tsv")
    csv_path = _fresh(run_dir / "metrics_cross.csv", args.force)
    md_path = _fresh(run_dir / "metrics_cross.md", args.force)

    store = ingest(atom_path)
    locator = config.resolve_encoder("cross_model")
    encoder = load_pair_classifier(locator)
    pairs = sorted(read_pairs(test_file))
    rows: list[MetricsRow] = []
    outputs = {"metrics_csv": csv_path, "metrics_md": md_path}
    for order in ("ij", "ji"):
        records = score_pairs(
            encoder,
            pairs,
            store,
            order,
            threshold=threshold,
            max_len=config["cross_max_len"],
            invert_scores=config["cross_invert_scores"],
        )
        row = metrics(
            confusion([r.score for r in records], [r.label for r in records], threshold),
            model=getattr(encoder, "name", locator),
            config=f"order={order}",
            threshold=threshold,
        )
        rows.append(row)
        dump = _fresh(run_dir / f"scores_cross_{order}.tsv", args.force)
        write_score_dump(records, dump)
        outputs[f"scores_{order}"] = dump
    csv_path.write_text(render(rows, "csv"), encoding="utf-8")
    md_path.write_text(render(rows, "markdown"), encoding="utf-8")
    print(render(rows, "markdown"), end="")
    append_entry(
        run_dir,
        "cross-eval",
        config.values,
        config["seed"],
        __version__,
        inputs={"atoms": atom_path, "pairs_test": test_file},
        outputs=outputs,
    )
    return EXIT_OK


def cmd_report(args) -> int:
    rows: list[MetricsRow] = []
    for run_dir in args.run_dirs:
        found = sorted(Path(run_dir).glob("metrics_*.csv"))
        if not found:
            raise ConfigError(f"no metrics_*.csv files under {run_dir}")
        for path in found:
            with open(path, encoding="utf-8", newline="") as stream:
                reader = csv.reader(stream)
                header = next(reader, None)
                if header != ["model", "config", "accuracy", "precision", "recall", "f1"]:
                    raise ConfigError(f"{path}: unexpected metrics header {header}")
                for line in reader:
                    model, cfg, acc, prec, rec, f1 = line
                    rows.append(
                        MetricsRow(
                            model=model,
                            config=cfg,
                            accuracy=float(acc),
                            precision=float(prec),
                            recall=float(rec),
                            f1=float(f1),
                            threshold=0.0,
                        )
                    )
    rows.sort(key=lambda r: (r.model, r.config))
    text = render(rows, args.style)
    print(text, end="")
    if args.out:
        out = _fresh(Path(args.out), args.force)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, threshold: bool = False) -> None:
    parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--seed", type=int, help="override the global seed")
    parser.add_argument("--out", help="override the run directory")
    parser.add_argument("--force", action="store_true", help="overwrite existing artifacts")
    if threshold:
        parser.add_argument("--threshold", type=float, help="override the decision threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocalign", description="vocabulary-alignment experiment pipeline"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and summarize an atom file")
    p.add_argument("--atoms", help="atom file (overrides config atom_file)")
    _add_common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-pairs", help="generate labeled pair files")
    _add_common(p)
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("extract", help="extract a contextual embedding table")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train the similarity model")
    _add_common(p)
    p.add_argument("--resume", action="store_true", help="continue from the run checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate the trained model on held-out pairs")
    _add_common(p, threshold=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("cross-eval", help="zero-shot pair classification, both orders")
    _add_common(p, threshold=True)
    p.set_defaults(func=cmd_cross_eval)

    p = sub.add_parser("report", help="merge metric tables from run directories")
    p.add_argument("run_dirs", nargs="+", help="run directories with metrics_*.csv")
    p.add_argument("--style", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", help="also write the combined table to this file")
    p.add_argument("--force", action="store_true", help="overwrite an existing output file")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrainingError, EncoderError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except VocalignError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
