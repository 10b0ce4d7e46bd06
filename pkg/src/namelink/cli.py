"""Command-line entry point: ingest, inspect, train, predict, evaluate.

Commands cover the whole pipeline: ``ingest`` converts a DBLP-format XML
dump into the line-delimited corpus store, ``stats`` reports corpus or block
counters, ``split``/``train``/``evaluate`` run one block's experiment, and
``predict`` routes a single name (loading a model only when the name is
ambiguous).  ``gen-synth`` emits a synthetic separable corpus for smoke
runs.

Configuration comes from flags, optionally backed by a flat key=value file
(flags win).  Every dispatched run appends one JSON line to a manifest.
Exit codes: 0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .blocking import (
    BlockingError,
    block_stats,
    build_block,
    corpus_stats,
    render_block_stats,
    render_corpus_stats,
)
from .dblp_xml import DblpParseError, ParseCounters, parse_dblp_stream
from .encoders import (
    NAME_DIM,
    TEXT_DIM,
    EmbeddingTableError,
    Encoders,
    HashingNameEncoder,
    HashingTextEncoder,
    load_embedding_table,
)
from .metrics import EVAL_ALL, EVAL_ANV, EvaluationError, evaluate_block, render_report
from .model import CheckpointError, load_checkpoint, save_checkpoint
from .names import build_author_registry
from .predict import PredictionError, RouteKind, predict_author, render_prediction, route_name
from .records import DEFAULT_KINDS
from .store import CorpusStoreError, load_corpus, read_corpus_store, write_corpus_store
from .synth import SynthConfig, SynthError, gen_synth
from .training import (
    MODE_ANV,
    MODE_FULL,
    Split,
    TrainingError,
    TrainRunConfig,
    derive_block_seeds,
    history_lines,
    split_per_author,
    train_block_model,
)

_OPERATIONAL_ERRORS = (
    BlockingError,
    CheckpointError,
    CorpusStoreError,
    DblpParseError,
    EmbeddingTableError,
    EvaluationError,
    PredictionError,
    SynthError,
    TrainingError,
    ValueError,
    OSError,
)


def _build_encoders(args) -> Encoders:
    name_encoder = HashingNameEncoder()
    text_encoder = HashingTextEncoder()
    name = name_encoder
    text = text_encoder
    if getattr(args, "name_table", None):
        name = load_embedding_table(args.name_table, NAME_DIM, name_encoder)
    if getattr(args, "text_table", None):
        text = load_embedding_table(args.text_table, TEXT_DIM, text_encoder)
    return Encoders(name=name, text=text)


def _slug(variate_key: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", variate_key.casefold()).strip("_")


def _train_config(args) -> TrainRunConfig:
    return TrainRunConfig(
        max_epochs=args.max_epochs,
        patience=args.patience,
        reassign_interval=args.reassign_interval,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )


def _train_single_block(
    corpus_path: str,
    variate_key: str,
    master_seed: int,
    checkpoint_path: str,
    history_path: str,
    config: TrainRunConfig,
    name_table: str | None,
    text_table: str | None,
) -> dict:
    """Train one block end to end; self-contained so it can run in a worker
    process."""
    corpus = load_corpus(corpus_path)
    registry = build_author_registry(corpus)
    block = build_block(corpus, registry, variate_key)
    split_seed, train_seed = derive_block_seeds(master_seed, block.variate_key)
    split = split_per_author(block, split_seed)

    args = argparse.Namespace(name_table=name_table, text_table=text_table)
    encoders = _build_encoders(args)
    result = train_block_model(
        block, split, encoders, config=TrainRunConfig(**{**config.__dict__, "seed": train_seed})
    )
    extra = {
        "variate": block.display_variate,
        "master_seed": master_seed,
        "best_epoch": result.best_epoch,
        "best_val_accuracy": max(h.val_accuracy for h in result.history),
        "epochs_run": len(result.history),
        "stopped_early": result.stopped_early,
        "val_on_train": result.val_on_train,
    }
    save_checkpoint(checkpoint_path, result.best_params, result.best_adam_state, list(block.authors), extra)
    Path(history_path).write_text("\n".join(history_lines(result.history)) + "\n", encoding="utf-8")
    return {
        "variate": block.display_variate,
        "classes": block.n_classes,
        "entries": len(block.entries),
        "train_samples": int(result.class_counts.sum()),
        **{k: extra[k] for k in ("best_epoch", "best_val_accuracy", "epochs_run", "stopped_early")},
        "checkpoint": checkpoint_path,
    }


def _cmd_ingest(args) -> dict:
    counters = ParseCounters()
    kinds = frozenset(k.strip() for k in args.kinds.split(",") if k.strip()) if args.kinds else DEFAULT_KINDS
    with open(args.xml, "rb") as stream:
        summary = write_corpus_store(
            parse_dblp_stream(stream, kinds_filter=kinds, counters=counters), args.out
        )
    print(f"records\t{summary.records}")
    print(f"author mentions\t{summary.author_mentions}")
    print(f"skipped (no title/authors/key)\t{counters.skipped}")
    print(f"skipped other kinds\t{counters.skipped_other_kinds}")
    print(f"records with empty source\t{counters.empty_source}")
    return {
        "records": summary.records,
        "author_mentions": summary.author_mentions,
        "skipped": counters.skipped,
        "skipped_other_kinds": counters.skipped_other_kinds,
        "empty_source": counters.empty_source,
        "out": args.out,
    }


def _cmd_stats(args) -> dict:
    if args.block is None:
        stats = corpus_stats(read_corpus_store(args.corpus))
        text = render_corpus_stats(stats)
        out = {"records": stats.records, "authors": stats.authors, "names": stats.names, "variates": stats.variates}
    else:
        corpus = load_corpus(args.corpus)
        registry = build_author_registry(corpus)
        block = build_block(corpus, registry, args.block)
        stats = block_stats(block)
        text = render_block_stats(block, stats)
        out = {"block": block.display_variate, **stats.__dict__}
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        out["out"] = args.out
    return out


def _cmd_split(args) -> dict:
    corpus = load_corpus(args.corpus)
    registry = build_author_registry(corpus)
    block = build_block(corpus, registry, args.block)
    split_seed, _ = derive_block_seeds(args.seed, block.variate_key)
    split = split_per_author(block, split_seed)
    counts = split.counts()
    lines = []
    for author in sorted(split.by_author, key=lambda a: a.render()):
        for key in sorted(split.by_author[author]):
            lines.append(f"{author.render()}\t{key}\t{split.by_author[author][key].value}")
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    summary = {s.value: counts[s] for s in Split}
    print(f"TRAIN/VAL/TEST records\t{counts[Split.TRAIN]}/{counts[Split.VAL]}/{counts[Split.TEST]}", file=sys.stderr)
    return {"block": block.display_variate, "split_seed": split_seed, **summary, "out": args.out}


def _cmd_train(args) -> dict:
    blocks = args.block
    config = _train_config(args)
    jobs = []
    if len(blocks) == 1 and not str(args.out).endswith("/") and not Path(args.out).is_dir():
        checkpoint_paths = [str(args.out)]
    else:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_paths = [str(out_dir / f"{_slug(key)}.npz") for key in blocks]
    for key, ckpt in zip(blocks, checkpoint_paths):
        jobs.append(
            (
                args.corpus,
                key,
                args.seed,
                ckpt,
                ckpt + ".history.ndjson",
                config,
                args.name_table,
                args.text_table,
            )
        )
    if args.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            summaries = list(pool.map(_train_single_block, *zip(*jobs)))
    else:
        summaries = [_train_single_block(*job) for job in jobs]
    for s in summaries:
        print(
            f"{s['variate']}\tclasses {s['classes']}\tepochs {s['epochs_run']}\t"
            f"best epoch {s['best_epoch']}\tval acc {s['best_val_accuracy']:.4f}\t{s['checkpoint']}"
        )
    return {"blocks": summaries}


def _cmd_predict(args) -> dict:
    corpus = load_corpus(args.corpus)
    registry = build_author_registry(corpus)
    route = route_name(registry, args.name)
    if route.kind is RouteKind.NEW:
        print(f"NEW\t{args.name}\tno matching author")
        return {"route": "NEW", "name": args.name}
    if route.kind is RouteKind.UNIQUE:
        print(f"UNIQUE\t{args.name}\t{route.author.render()}")
        return {"route": "UNIQUE", "name": args.name, "author": route.author.render()}

    print(
        f"AMBIGUOUS\t{args.name}\t{route.candidate_count} candidates"
        f"\tblock {registry.display_variate(route.variate_key)}"
    )
    if not args.checkpoint:
        raise PredictionError(
            f"name {args.name!r} is ambiguous; a trained checkpoint is required (--checkpoint)"
        )
    if not args.record_key:
        raise PredictionError("an ambiguous name needs the record to disambiguate (--record-key)")
    by_key = {r.record_key: r for r in corpus}
    record = by_key.get(args.record_key)
    if record is None:
        raise PredictionError(f"record key {args.record_key!r} not in corpus")
    bundle = load_checkpoint(args.checkpoint)
    class_index = {a: i for i, a in enumerate(bundle.class_index)}
    encoders = _build_encoders(args)
    variate_mode = MODE_ANV if args.mode == EVAL_ANV else MODE_FULL
    prediction = predict_author(
        bundle.params, class_index, record, args.name, variate_mode, encoders, aggregation=args.agg
    )
    print(render_prediction(prediction))
    return {
        "route": "AMBIGUOUS",
        "name": args.name,
        "record": args.record_key,
        "chosen": prediction.chosen.render(),
        "pairs": prediction.pair_count,
    }


def _cmd_evaluate(args) -> dict:
    corpus = load_corpus(args.corpus)
    registry = build_author_registry(corpus)
    block = build_block(corpus, registry, args.block)
    split_seed, _ = derive_block_seeds(args.seed, block.variate_key)
    split = split_per_author(block, split_seed)
    bundle = load_checkpoint(args.checkpoint, expected_classes=block.n_classes)
    if list(bundle.class_index) != list(block.authors):
        raise EvaluationError(
            "checkpoint class order does not match the block built from this corpus"
        )
    encoders = _build_encoders(args)
    report = evaluate_block(bundle.params, block, split, args.mode, encoders, aggregation=args.agg)
    text = render_report(report)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return {
        "block": block.display_variate,
        "mode": report.mode,
        "instances": report.instance_count,
        "MiAF1": report.miaf1,
        "MaAF1": report.maaf1,
        "out": args.out,
    }


def _cmd_gen_synth(args) -> dict:
    config = SynthConfig(
        n_authors=args.authors,
        variate_key=args.block,
        clique_size=args.clique,
        records_per_author=args.records_per_author,
        vocab_size=args.vocab,
        seed=args.seed,
        share_full_name=args.share_full_name,
        coauthors_per_record=args.coauthors_per_record,
    )
    corpus = gen_synth(config)
    summary = write_corpus_store(corpus.records, args.out)
    truth_path = args.truth or f"{args.out}.truth.tsv"
    Path(truth_path).write_text(corpus.truth_text(), encoding="utf-8")
    print(f"records\t{summary.records}")
    print(f"authors\t{len(corpus.authors)}")
    print(f"corpus\t{args.out}")
    print(f"truth\t{truth_path}")
    return {
        "records": summary.records,
        "authors": len(corpus.authors),
        "out": args.out,
        "truth": truth_path,
    }


_COMMANDS = {
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "split": _cmd_split,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "gen-synth": _cmd_gen_synth,
}

_REQUIRED = {
    "ingest": ("xml", "out"),
    "stats": ("corpus",),
    "split": ("corpus", "block"),
    "train": ("corpus", "block", "out"),
    "predict": ("corpus", "name"),
    "evaluate": ("corpus", "block", "checkpoint"),
    "gen-synth": ("out",),
}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="namelink", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        p = subparsers.add_parser(name, help=help_text)
        p.add_argument("--seed", type=int, default=0, help="master seed for this run")
        p.add_argument("--config", default=None, help="flat key=value config file; flags win")
        p.add_argument("--manifest", default="runs.ndjson", help="append-only run manifest path")
        subs[name] = p
        return p

    # required-ness is checked after the config file is merged in, so any of
    # these may come from the file instead of the command line
    p = sub("ingest", "parse a DBLP-format XML dump into a corpus store")
    p.add_argument("--xml", default=None, help="input XML path")
    p.add_argument("--out", default=None, help="output corpus store path")
    p.add_argument("--kinds", default=None, help="comma-separated record kinds (default article,inproceedings)")

    p = sub("stats", "corpus-level or per-block statistics")
    p.add_argument("--corpus", default=None)
    p.add_argument("--block", default=None, help="name variate; omit for corpus-level stats")
    p.add_argument("--out", default=None, help="also write the table here")

    p = sub("split", "per-author train/val/test assignment for one block")
    p.add_argument("--corpus", default=None)
    p.add_argument("--block", default=None)
    p.add_argument("--out", default=None, help="write the assignment table here (default stdout)")

    p = sub("train", "train the classifier of one or more blocks")
    p.add_argument("--corpus", default=None)
    p.add_argument("--block", action="append", default=None, help="repeatable")
    p.add_argument("--out", default=None, help="checkpoint path (single block) or directory")
    p.add_argument("--parallel", type=int, default=1, help="concurrent block trainings")
    p.add_argument("--max-epochs", type=int, default=1000)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--reassign-interval", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--name-table", default=None, help="precomputed name-embedding table")
    p.add_argument("--text-table", default=None, help="precomputed text-embedding table")

    p = sub("predict", "route a name; predict the author when ambiguous")
    p.add_argument("--corpus", default=None)
    p.add_argument("--name", default=None, help="the author name to resolve")
    p.add_argument("--record-key", default=None, help="record whose authorship is in question")
    p.add_argument("--checkpoint", default=None, help="trained block checkpoint")
    p.add_argument("--mode", choices=(EVAL_ALL, EVAL_ANV), default=EVAL_ALL)
    p.add_argument("--agg", choices=("sum", "max"), default="sum")
    p.add_argument("--name-table", default=None)
    p.add_argument("--text-table", default=None)

    p = sub("evaluate", "score a trained block on its test split")
    p.add_argument("--corpus", default=None)
    p.add_argument("--block", default=None)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--mode", choices=(EVAL_ALL, EVAL_ANV), default=EVAL_ALL)
    p.add_argument("--agg", choices=("sum", "max"), default="sum")
    p.add_argument("--out", default=None, help="also write the report here")
    p.add_argument("--name-table", default=None)
    p.add_argument("--text-table", default=None)

    p = sub("gen-synth", "generate a synthetic separable corpus")
    p.add_argument("--out", default=None, help="output corpus store path")
    p.add_argument("--truth", default=None, help="ground-truth file (default <out>.truth.tsv)")
    p.add_argument("--block", default="Y Chen", help="shared atomic name variate")
    p.add_argument("--authors", type=int, default=20)
    p.add_argument("--clique", type=int, default=5)
    p.add_argument("--records-per-author", type=int, default=40)
    p.add_argument("--vocab", type=int, default=30)
    p.add_argument("--coauthors-per-record", type=int, default=2)
    p.add_argument("--share-full-name", action="store_true")

    return parser, subs


def _parse_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


def _apply_config_file(args: argparse.Namespace, subparser: argparse.ArgumentParser) -> None:
    """Fill flag values from the config file wherever the flag was left at
    its parser default."""
    if not args.config:
        return
    entries = _parse_config_file(args.config)
    known = {}
    for action in subparser._actions:
        if action.dest not in ("help",):
            known[action.dest] = action
    for key, raw in entries.items():
        action = known.get(key)
        if action is None:
            raise ValueError(f"config key {key!r} is not a flag of this command")
        if getattr(args, action.dest) != action.default:
            continue  # flag given on the command line wins
        if isinstance(action.const, bool) or isinstance(action.default, bool):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(raw)
        elif isinstance(action, argparse._AppendAction):
            value = [raw]
        else:
            value = raw
        setattr(args, action.dest, value)


def _write_manifest(args: argparse.Namespace, status: str, payload: dict, duration: float) -> None:
    snapshot = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "manifest") and not k.startswith("_")
    }
    entry = {
        "command": args.command,
        "status": status,
        "config": snapshot,
        "result": payload,
        "duration_s": round(duration, 3),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(args.manifest, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, ensure_ascii=False, default=str) + "\n")


def main(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        _apply_config_file(args, subs[args.command])
    except _OPERATIONAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    missing = [name for name in _REQUIRED[args.command] if getattr(args, name) in (None, [])]
    if missing:
        subs[args.command].error(
            "missing required argument(s): " + ", ".join(f"--{m.replace('_', '-')}" for m in missing)
        )
    try:
        payload = _COMMANDS[args.command](args)
    except _OPERATIONAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        try:
            _write_manifest(args, "error", {"error": str(exc)}, time.perf_counter() - started)
        except OSError:
            pass
        return 1
    _write_manifest(args, "ok", payload, time.perf_counter() - started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
