"""Command-line entry point wiring the full pipeline.

Subcommands: validate, stats, train-summarizer, train-ranker,
train-supervised, recommend, evaluate, synth. Diagnostics go to stderr,
data to stdout; exit code 0 means success. Every command is reproducible
byte-for-byte given the same config, inputs, and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from . import corpus as corpusmod
from . import evaluation as evalmod
from . import ranker as rankermod
from . import stats as statsmod
from . import summarizer as summod
from . import supervised as supmod
from . import synth as synthmod
from .embed import load_embeddings

log = logging.getLogger("tutorec")


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="engine config file (JSON); falls back to $STREAMLINK_CONFIG")
    parser.add_argument("--seed", type=int, help="override every configured seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tutorec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load and cross-check all configured corpus files")
    _add_config_args(p)

    p = sub.add_parser("stats", help="build and cache co-occurrence statistics")
    _add_config_args(p)

    for name in ("train-summarizer", "train-ranker", "train-supervised"):
        p = sub.add_parser(name, help=f"{name.split('-', 1)[1]} training")
        _add_config_args(p)

    p = sub.add_parser("recommend", help="rank tutorials for one transcript")
    _add_config_args(p)
    p.add_argument("--transcript-id", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--out-dir", help="also write ranking.jsonl and summary.jsonl here")

    p = sub.add_parser("evaluate", help="evaluate ranking systems against gold links")
    _add_config_args(p)
    p.add_argument("--systems", default="ours,string,keyword,pmi",
                   help="comma list from: ours,string,keyword,pmi,supervised")
    p.add_argument("--granularity", choices=("transcript", "sentence"))
    p.add_argument("--out-dir", help="write report.jsonl (and predictions.jsonl) here")

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted gold links")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-transcripts", type=int, default=50)
    p.add_argument("--num-tutorials", type=int, default=20)
    p.add_argument("--tools-per-tutorial", type=int, default=3)
    p.add_argument("--transcript-length", type=int, default=60)
    p.add_argument("--noise-rate", type=float, default=0.2)
    p.add_argument("--chitchat-vocab-size", type=int, default=40)
    p.add_argument("--tool-vocab-size", type=int, default=60)
    return parser


# ---------------------------------------------------------------------------
# shared loading helpers


def _engine(args) -> cfgmod.EngineConfig:
    return cfgmod.load_engine_config(args.config, getattr(args, "seed", None))


def _load_stats(cfg, transcripts):
    cache = cfg.paths.stats_cache_path()
    digest = statsmod.corpus_content_hash(transcripts)
    if cache.exists():
        stats, stored = statsmod.load_stats(cache)
        if stored == digest:
            return stats
        log.info("stats cache is stale, rebuilding")
    return statsmod.build_stats(transcripts)


def _model_dir(cfg) -> Path:
    path = Path(cfg.paths.model_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_losses(path: Path, history) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for epoch, loss in enumerate(history):
            fh.write(json.dumps({"epoch": epoch, "loss": loss}) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    cfg = _engine(args)
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    pool = corpusmod.load_tutorial_pool(cfg.paths.require("tutorials"))
    print(f"transcripts: {len(transcripts)}")
    print(f"tutorials: {len(pool.real)} (+1 no-link entry)")
    if cfg.paths.ontology:
        ontology = corpusmod.load_ontology(cfg.paths.require("ontology"))
        print(f"tool names: {len(ontology.tool_names)}")
    if cfg.paths.annotations:
        annotations = corpusmod.load_annotations(
            cfg.paths.require("annotations"), transcripts, pool)
        print(f"annotations: {len(annotations)}")
    if cfg.paths.embeddings:
        table = load_embeddings(cfg.paths.require("embeddings"))
        print(f"embeddings: {len(table.vectors)} tokens, dim {table.dim}")
    print("ok")
    return 0


def cmd_stats(args) -> int:
    cfg = _engine(args)
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    stats = statsmod.build_stats(transcripts)
    cache = cfg.paths.stats_cache_path()
    cache.parent.mkdir(parents=True, exist_ok=True)
    statsmod.save_stats(stats, cache, statsmod.corpus_content_hash(transcripts))
    print(f"wrote {cache} ({len(stats.doc_count)} tokens, {len(stats.pair_count)} pairs)")
    return 0


def cmd_train_summarizer(args) -> int:
    cfg = _engine(args)
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    table = load_embeddings(cfg.paths.require("embeddings"))
    model, history = summod.train_summarizer(
        transcripts, table, cfg.summarizer.train, cfg.summarizer.select_threshold)
    model_dir = _model_dir(cfg)
    ckpt = model_dir / "summarizer.ckpt"
    summod.save_summarizer(ckpt, model)
    _write_losses(model_dir / "summarizer-losses.jsonl", history)
    log.info("summarizer: %d epochs, final mean loss %.6f", len(history), history[-1])
    print(str(ckpt))
    return 0


def cmd_train_ranker(args) -> int:
    cfg = _engine(args)
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    table = load_embeddings(cfg.paths.require("embeddings"))
    clf, history = rankermod.train_discourse_classifier(transcripts, table, cfg.ranker)
    model_dir = _model_dir(cfg)
    ckpt = model_dir / "discourse.ckpt"
    rankermod.save_discourse(ckpt, clf)
    _write_losses(model_dir / "discourse-losses.jsonl", history)
    log.info("discourse: %d epochs, final mean loss %.6f", len(history), history[-1])
    print(str(ckpt))
    return 0


def cmd_train_supervised(args) -> int:
    cfg = _engine(args)
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    pool = corpusmod.load_tutorial_pool(cfg.paths.require("tutorials"))
    annotations = corpusmod.load_annotations(
        cfg.paths.require("annotations"), transcripts, pool)
    table = load_embeddings(cfg.paths.require("embeddings"))
    encoder = supmod.PooledStaticEncoder(table)
    model, history = supmod.train_link_classifier(
        annotations, transcripts, pool, encoder, cfg.supervised.train,
        cfg.supervised.negative_ratio, cfg.supervised.decision_threshold)
    model_dir = _model_dir(cfg)
    ckpt = model_dir / "supervised.ckpt"
    supmod.save_link_classifier(ckpt, model)
    _write_losses(model_dir / "supervised-losses.jsonl", history)
    log.info("supervised: %d epochs, final mean loss %.6f", len(history), history[-1])
    print(str(ckpt))
    return 0


def _load_pipeline(cfg):
    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    pool = corpusmod.load_tutorial_pool(cfg.paths.require("tutorials"))
    ontology = corpusmod.load_ontology(cfg.paths.require("ontology"))
    table = load_embeddings(cfg.paths.require("embeddings"))
    stats = _load_stats(cfg, transcripts)
    model_dir = Path(cfg.paths.model_dir)
    summarizer = summod.load_summarizer(model_dir / "summarizer.ckpt", table)
    discourse = rankermod.load_discourse(model_dir / "discourse.ckpt")
    return transcripts, pool, ontology, table, stats, summarizer, discourse


def cmd_recommend(args) -> int:
    cfg = _engine(args)
    transcripts, pool, ontology, table, stats, summarizer, discourse = _load_pipeline(cfg)
    matches = [t for t in transcripts if t.id == args.transcript_id]
    if not matches:
        raise ValueError(f"unknown transcript id {args.transcript_id!r}")
    transcript = matches[0]
    ranking = rankermod.rank(
        transcript, pool, ontology, stats, summarizer, discourse, table,
        cfg.filter, normalize=cfg.eval.normalize_scores)
    records = ranking.records()[:args.top_k]
    for rec in records:
        print(json.dumps(rec, sort_keys=True))
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        corpusmod.write_jsonl(out / "ranking.jsonl", records)
        summary = summod.summarize(transcript, summarizer)
        corpusmod.write_jsonl(out / "summary.jsonl",
                              [summod.summary_record(transcript.id, summary)])
    return 0


def cmd_evaluate(args) -> int:
    cfg = _engine(args)
    names = [s.strip() for s in args.systems.split(",") if s.strip()]
    if not names:
        raise ValueError("no systems requested")
    granularity = args.granularity or cfg.eval.granularity

    transcripts = corpusmod.load_transcripts(cfg.paths.require("transcripts"))
    pool = corpusmod.load_tutorial_pool(cfg.paths.require("tutorials"))
    annotations = corpusmod.load_annotations(
        cfg.paths.require("annotations"), transcripts, pool)
    table = load_embeddings(cfg.paths.require("embeddings"))
    none_id = pool.none.id

    unsupervised = [n for n in names if n != "supervised"]
    systems = {}
    stats = None
    if any(n in ("ours", "pmi") for n in unsupervised):
        stats = _load_stats(cfg, transcripts)
    ontology = None
    if any(n in ("ours", "keyword") for n in unsupervised):
        ontology = corpusmod.load_ontology(cfg.paths.require("ontology"))
    for name in unsupervised:
        if name == "ours":
            model_dir = Path(cfg.paths.model_dir)
            summarizer = summod.load_summarizer(model_dir / "summarizer.ckpt", table)
            discourse = rankermod.load_discourse(model_dir / "discourse.ckpt")
            systems[name] = (
                lambda t, s=summarizer, d=discourse: rankermod.rank(
                    t, pool, ontology, stats, s, d, table,
                    cfg.filter, normalize=cfg.eval.normalize_scores)
            )
        elif name == "string":
            systems[name] = lambda t: evalmod.baseline_string_similarity(t, pool, table)
        elif name == "keyword":
            systems[name] = lambda t: evalmod.baseline_keyword(t, pool, ontology)
        elif name == "pmi":
            systems[name] = lambda t: evalmod.baseline_information(t, pool, stats)
        else:
            raise ValueError(f"unknown system {name!r}")

    reports = []
    if systems:
        reports.append(evalmod.evaluate_unsupervised(
            transcripts, annotations, none_id, systems, granularity=granularity))

    prediction_records = []
    if "supervised" in names:
        model = supmod.load_link_classifier(
            Path(cfg.paths.model_dir) / "supervised.ckpt",
            supmod.PooledStaticEncoder(table))
        predictions = {}
        for transcript in transcripts:
            for sentence in transcript.sentences:
                ranked = supmod.predict_links(model, transcript.id, sentence, pool)
                predictions[(transcript.id, sentence.index)] = ranked
                prediction_records.append(
                    supmod.prediction_record(transcript.id, sentence.index, ranked))
        reports.append(evalmod.evaluate_supervised(
            predictions, annotations, none_id, model.decision_threshold))

    merged = evalmod.EvalReport()
    for report in reports:
        merged.rows.update(report.rows)
        merged.counts.update(report.counts)
    print(merged.render())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.jsonl", "w", encoding="utf-8") as fh:
            for line in merged.json_rows():
                fh.write(line + "\n")
        if prediction_records:
            corpusmod.write_jsonl(out / "predictions.jsonl", prediction_records)
    return 0


def cmd_synth(args) -> int:
    config = synthmod.SynthConfig(
        num_tutorials=args.num_tutorials,
        num_transcripts=args.num_transcripts,
        tools_per_tutorial=args.tools_per_tutorial,
        transcript_length=args.transcript_length,
        noise_rate=args.noise_rate,
        chitchat_vocab_size=args.chitchat_vocab_size,
        tool_vocab_size=args.tool_vocab_size,
        seed=args.seed,
    )
    corpus = synthmod.generate_corpus(config)
    paths = synthmod.write_corpus(corpus, args.out_dir)
    for name in sorted(paths):
        print(str(paths[name]))
    return 0


_COMMANDS = {
    "validate": cmd_validate,
    "stats": cmd_stats,
    "train-summarizer": cmd_train_summarizer,
    "train-ranker": cmd_train_ranker,
    "train-supervised": cmd_train_supervised,
    "recommend": cmd_recommend,
    "evaluate": cmd_evaluate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - every module error becomes exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
