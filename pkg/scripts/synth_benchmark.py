#!/usr/bin/env python3
"""Noise-sweep benchmark on planted synthetic corpora.

Generates a corpus per noise level, trains the summarizer, discourse
classifier, and link classifier, then reports Hit@3/Hit@5 for the full
pipeline against the three baselines plus the supervised F1. This is the
repo's stand-in for a results table: the planted gold makes every number
checkable, and the ordering between systems is the interesting part.

    python3 scripts/synth_benchmark.py --noise 0.0 0.2 0.4 0.6 --seed 0
"""

import argparse
import sys
import time

from tutorec.evaluation import (
    EvalReport,
    baseline_information,
    baseline_keyword,
    baseline_string_similarity,
    evaluate_supervised,
    evaluate_unsupervised,
)
from tutorec.filtering import FilterConfig
from tutorec.nn import TrainConfig
from tutorec.ranker import rank, train_discourse_classifier
from tutorec.stats import build_stats
from tutorec.summarizer import train_summarizer
from tutorec.supervised import PooledStaticEncoder, predict_links, train_link_classifier
from tutorec.synth import SynthConfig, generate_corpus


def run_noise_level(noise: float, seed: int, epochs_scale: float) -> EvalReport:
    corpus = generate_corpus(SynthConfig(noise_rate=noise, seed=seed))
    table = corpus.embedding_table()
    stats = build_stats(corpus.transcripts)

    summarizer, _ = train_summarizer(
        corpus.transcripts, table,
        TrainConfig(learning_rate=0.1, epochs=int(150 * epochs_scale), seed=seed))
    discourse, _ = train_discourse_classifier(
        corpus.transcripts, table,
        TrainConfig(learning_rate=0.1, epochs=int(300 * epochs_scale), seed=seed))
    filter_config = FilterConfig()

    systems = {
        "ours": lambda t: rank(t, corpus.pool, corpus.ontology, stats,
                               summarizer, discourse, table, filter_config),
        "string": lambda t: baseline_string_similarity(t, corpus.pool, table),
        "keyword": lambda t: baseline_keyword(t, corpus.pool, corpus.ontology),
        "pmi": lambda t: baseline_information(t, corpus.pool, stats),
    }
    report = evaluate_unsupervised(
        corpus.transcripts, corpus.annotations, "none", systems)

    if corpus.annotations:
        encoder = PooledStaticEncoder(table)
        link_model, _ = train_link_classifier(
            corpus.annotations, corpus.transcripts, corpus.pool, encoder,
            TrainConfig(learning_rate=0.1, epochs=int(30 * epochs_scale), seed=seed),
            negative_ratio=8)
        predictions = {
            (t.id, s.index): predict_links(link_model, t.id, s, corpus.pool)
            for t in corpus.transcripts for s in t.sentences
        }
        sup = evaluate_supervised(predictions, corpus.annotations, "none",
                                  link_model.decision_threshold)
        report.rows.update(sup.rows)
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.2, 0.4, 0.6])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs-scale", type=float, default=1.0,
                        help="scale every training run's epoch count")
    args = parser.parse_args(argv)

    for noise in args.noise:
        t0 = time.time()
        report = run_noise_level(noise, args.seed, args.epochs_scale)
        print(f"\n=== noise_rate {noise:.2f} (seed {args.seed}, {time.time()-t0:.1f}s) ===")
        print(report.render())
    return 0


if __name__ == "__main__":
    sys.exit(main())
