"""Hit@K and F1 metrics, reference baselines, and report rendering.

The three baselines rank the whole pool (no filtering, no summarization):
by embedding cosine against the full transcript, by shared tool-name count,
and by co-occurrence similarity. Unsupervised evaluation is transcript-level
by default (a transcript's gold set is the union of its sentence links);
sentence-level granularity is available behind a flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .corpus import (
    AnnotationRecord,
    ToolOntology,
    Transcript,
    TutorialPool,
    match_tool_names,
    tool_names_in_tokens,
)
from .embed import EmbeddingTable, cosine, pool_mean
from .ranker import RankedList, make_ranked_list
from .stats import CooccurrenceStats, pmi_similarity

RankingSystem = Callable[[Transcript], Sequence[str]]


def hit_at_k(ranked_ids: Sequence[str], gold_ids: set[str], k: int) -> int:
    """1 when any gold id appears among the first k entries, else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gold_ids:
        raise ValueError("gold set must be non-empty")
    return int(any(tid in gold_ids for tid in ranked_ids[:k]))


# ---------------------------------------------------------------------------
# baselines (each ranks the full pool, no-link entry excluded)


def baseline_string_similarity(transcript: Transcript, pool: TutorialPool,
                               table: EmbeddingTable) -> RankedList:
    """Cosine of mean-pooled embeddings, full transcript vs title+body."""
    d_vec = pool_mean(table.embed_tokens(transcript.tokens))
    scored = []
    for tut in pool.real:
        s = cosine(pool_mean(table.embed_tokens(tut.text_tokens)), d_vec)
        scored.append((tut.id, s, 0.0))
    return make_ranked_list(scored)


def baseline_keyword(transcript: Transcript, pool: TutorialPool,
                     ontology: ToolOntology) -> RankedList:
    """Count of tool names shared between the transcript and each tutorial."""
    mentioned = match_tool_names(transcript, ontology)
    scored = []
    for tut in pool.real:
        shared = mentioned & tool_names_in_tokens(ontology, tut.text_tokens)
        scored.append((tut.id, float(len(shared)), 0.0))
    return make_ranked_list(scored)


def baseline_information(transcript: Transcript, pool: TutorialPool,
                         stats: CooccurrenceStats) -> RankedList:
    """Co-occurrence similarity of the full transcript against each body."""
    d_tokens = transcript.tokens
    scored = [
        (tut.id, pmi_similarity(stats, d_tokens, tut.body_tokens), 0.0)
        for tut in pool.real
    ]
    return make_ranked_list(scored)


# ---------------------------------------------------------------------------
# reports


@dataclass
class EvalReport:
    rows: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def render(self) -> str:
        metrics: list[str] = []
        for row in self.rows.values():
            for name in row:
                if name not in metrics:
                    metrics.append(name)
        width = max((len(name) for name in self.rows), default=6)
        header = "system".ljust(width) + "".join(f"  {m:>10}" for m in metrics)
        lines = [header, "-" * len(header)]
        for name, row in self.rows.items():
            cells = "".join(
                f"  {row[m]:>10.4f}" if m in row else f"  {'-':>10}" for m in metrics
            )
            lines.append(name.ljust(width) + cells)
        counts = ", ".join(f"{k}={v}" for k, v in self.counts.items())
        if counts:
            lines.append(counts)
        return "\n".join(lines)

    def json_rows(self) -> list[str]:
        out = []
        for name, row in self.rows.items():
            rec = {"system": name, **row, **{f"count_{k}": v for k, v in self.counts.items()}}
            out.append(json.dumps(rec, sort_keys=True))
        return out


def transcript_gold(annotations: Sequence[AnnotationRecord],
                    none_id: str) -> dict[str, set[str]]:
    """Per-transcript gold tutorial ids: union over sentence links, no-link excluded."""
    gold: dict[str, set[str]] = {}
    for rec in annotations:
        ids = {tid for tid in rec.linked_tutorial_ids if tid != none_id}
        if ids:
            gold.setdefault(rec.transcript_id, set()).update(ids)
    return gold


def sentence_gold(annotations: Sequence[AnnotationRecord],
                  none_id: str) -> dict[tuple[str, int], set[str]]:
    gold: dict[tuple[str, int], set[str]] = {}
    for rec in annotations:
        ids = {tid for tid in rec.linked_tutorial_ids if tid != none_id}
        if ids:
            gold.setdefault((rec.transcript_id, rec.sentence_index), set()).update(ids)
    return gold


def evaluate_unsupervised(
    transcripts: Sequence[Transcript],
    annotations: Sequence[AnnotationRecord],
    none_id: str,
    systems: Mapping[str, RankingSystem],
    ks: Sequence[int] = (3, 5),
    granularity: str = "transcript",
) -> EvalReport:
    """Mean Hit@K per system.

    A system maps a transcript to ranked tutorial ids (a RankedList works
    too). Transcripts without any gold link are skipped and counted. With
    sentence granularity every annotated sentence is one evaluation unit,
    scored against its transcript's ranking.
    """
    if granularity not in ("transcript", "sentence"):
        raise ValueError(f"unknown granularity {granularity!r}")
    by_transcript = transcript_gold(annotations, none_id)
    if granularity == "transcript":
        units = [(t, by_transcript[t.id]) for t in transcripts if by_transcript.get(t.id)]
    else:
        by_sentence = sentence_gold(annotations, none_id)
        lookup = {t.id: t for t in transcripts}
        units = [
            (lookup[tid], gold)
            for (tid, _), gold in sorted(by_sentence.items())
            if tid in lookup
        ]
    skipped = sum(1 for t in transcripts if not by_transcript.get(t.id))
    if not units:
        raise ValueError("no evaluation units: corpus has no gold links")

    report = EvalReport(counts={"units": len(units), "skipped_transcripts": skipped})
    for name, system in systems.items():
        rankings: dict[str, list[str]] = {}
        hits = {k: 0 for k in ks}
        for transcript, gold in units:
            if transcript.id not in rankings:
                ranked = system(transcript)
                rankings[transcript.id] = ranked.ids() if isinstance(ranked, RankedList) else list(ranked)
            for k in ks:
                hits[k] += hit_at_k(rankings[transcript.id], gold, k)
        report.rows[name] = {f"hit_at_{k}": hits[k] / len(units) for k in ks}
    return report


def evaluate_supervised(
    predictions: Mapping[tuple[str, int], Sequence[tuple[str, float]]],
    annotations: Sequence[AnnotationRecord],
    none_id: str,
    decision_threshold: float = 0.5,
) -> EvalReport:
    """Micro-F1 over (sentence, tutorial) pairs.

    A pair is predicted positive when its probability clears the decision
    threshold and beats the sentence's no-link probability. Gold positives
    are the annotated non-no-link pairs. F1 is 0 when nothing is predicted.
    Every annotated sentence must have a prediction.
    """
    gold_by_sentence = sentence_gold(annotations, none_id)
    missing = sorted(key for key in gold_by_sentence if key not in predictions)
    if missing:
        raise ValueError(f"predictions missing for annotated sentences: {missing}")

    gold_pairs = {
        (tid, sidx, tut) for (tid, sidx), ids in gold_by_sentence.items() for tut in ids
    }
    predicted_pairs: set[tuple[str, int, str]] = set()
    for (tid, sidx), ranked in predictions.items():
        p_none = next((p for t, p in ranked if t == none_id), 0.0)
        for tut, p in ranked:
            if tut != none_id and p > decision_threshold and p > p_none:
                predicted_pairs.add((tid, sidx, tut))

    true_pos = len(gold_pairs & predicted_pairs)
    precision = true_pos / len(predicted_pairs) if predicted_pairs else 0.0
    recall = true_pos / len(gold_pairs) if gold_pairs else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        rows={"supervised": {"f1": f1, "precision": precision, "recall": recall}},
        counts={
            "gold_pairs": len(gold_pairs),
            "predicted_pairs": len(predicted_pairs),
            "sentences": len(predictions),
        },
    )
