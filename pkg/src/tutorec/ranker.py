"""Tutorial ranking: embedding similarity plus discourse consistency.

Candidates that survive filtering are scored two ways against the transcript
summary: cosine similarity of mean-pooled embeddings, and the output of a
discourse classifier trained (without labels) to recognize whether two text
representations belong together. The classifier learns from transcripts
split in half: a document's own second half is a positive continuation, a
random other document's second half is a negative one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import ToolOntology, Transcript, Tutorial, TutorialPool
from .embed import EmbeddingTable, cosine, pool_max, pool_mean
from .filtering import FilterConfig, filter_pool
from .nn import (
    PairClassifier,
    TrainConfig,
    accumulate,
    check_finite,
    clamp_probability,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
)
from .stats import CooccurrenceStats
from .summarizer import PROB_CLAMP, SummarizerModel, summarize

log = logging.getLogger(__name__)


class DiscourseClassifier(PairClassifier):
    """Pair classifier over [first-segment : second-segment] max-pools."""


@dataclass(frozen=True)
class RankedEntry:
    tutorial_id: str
    score_str: float
    score_disc: float
    total: float


@dataclass(frozen=True)
class RankedList:
    entries: tuple[RankedEntry, ...]

    def ids(self) -> list[str]:
        return [e.tutorial_id for e in self.entries]

    def top(self, k: int) -> tuple[RankedEntry, ...]:
        return self.entries[:k]

    def records(self) -> list[dict]:
        return [
            {
                "tutorial_id": e.tutorial_id,
                "score_str": e.score_str,
                "score_disc": e.score_disc,
                "score": e.total,
            }
            for e in self.entries
        ]


def make_ranked_list(scored: Sequence[tuple[str, float, float]]) -> RankedList:
    """Sort (id, score_str, score_disc) triples by total desc, id asc."""
    entries = [
        RankedEntry(tid, s_str, s_disc, s_str + s_disc)
        for tid, s_str, s_disc in scored
    ]
    entries.sort(key=lambda e: (-e.total, e.tutorial_id))
    return RankedList(tuple(entries))


def split_halves(tokens: Sequence[str]) -> tuple[Sequence[str], Sequence[str]]:
    """First/second half split; an odd middle token goes to the first half."""
    cut = (len(tokens) + 1) // 2
    return tokens[:cut], tokens[cut:]


def train_discourse_classifier(
    transcripts: Sequence[Transcript],
    backend,
    config: TrainConfig,
) -> tuple[DiscourseClassifier, list[float]]:
    """Contrastively train the half-vs-half consistency classifier.

    Transcripts with fewer than two tokens cannot be split and are skipped
    with a warning. Deterministic for a fixed config.
    """
    usable: list[Transcript] = []
    for t in transcripts:
        if t.num_tokens < 2:
            log.warning("skipping single-token transcript %r in discourse training", t.id)
            continue
        usable.append(t)
    if len(usable) < 2:
        raise ValueError("discourse training needs at least two transcripts with >= 2 tokens")

    firsts = []
    seconds = []
    for t in usable:
        head, tail = split_halves(t.tokens)
        firsts.append(pool_max(backend.embed_tokens(head)))
        seconds.append(pool_max(backend.embed_tokens(tail)))

    rng = np.random.default_rng(config.seed)
    clf = DiscourseClassifier.create(2 * backend.dim, config.hidden_dim, rng)
    n = len(usable)
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for pos, i in enumerate(order):
            i = int(i)
            j = int(order[(pos + 1) % n])
            x_pos = np.concatenate([firsts[i], seconds[i]])
            x_neg = np.concatenate([firsts[i], seconds[j]])
            loss = _contrastive_step(clf, x_pos, x_neg, config.learning_rate)
            total += loss
        history.append(total / n)
    return clf, history


def _contrastive_step(clf: PairClassifier, x_pos: np.ndarray, x_neg: np.ndarray,
                      learning_rate: float) -> float:
    p_pos, t_pos = clf.forward(x_pos)
    p_neg, t_neg = clf.forward(x_neg)
    cp_pos = clamp_probability(p_pos)
    cp_neg = clamp_probability(p_neg)
    loss = check_finite(-(math.log(cp_pos) + math.log(1.0 - cp_neg)), "discourse")
    dp_pos = -1.0 / cp_pos if PROB_CLAMP < p_pos < 1.0 - PROB_CLAMP else 0.0
    dp_neg = 1.0 / (1.0 - cp_neg) if PROB_CLAMP < p_neg < 1.0 - PROB_CLAMP else 0.0
    grads_pos, _ = clf.backward(x_pos, t_pos, p_pos, dp_pos)
    grads_neg, _ = clf.backward(x_neg, t_neg, p_neg, dp_neg)
    sgd_step(clf.params(), accumulate(grads_pos, grads_neg), learning_rate)
    return loss


# ---------------------------------------------------------------------------
# scoring


def score_str(tutorial: Tutorial, summary_tokens: Sequence[str],
              table: EmbeddingTable) -> float:
    """Cosine between mean-pooled tutorial (title+body) and summary embeddings."""
    t_vec = pool_mean(table.embed_tokens(tutorial.text_tokens))
    d_vec = pool_mean(table.embed_tokens(summary_tokens))
    return cosine(t_vec, d_vec)


def score_disc(clf: DiscourseClassifier, tutorial: Tutorial,
               summary_tokens: Sequence[str], table: EmbeddingTable) -> float:
    """Discourse-consistency probability for [tutorial : summary]."""
    t_vec = pool_max(table.embed_tokens(tutorial.text_tokens))
    d_vec = pool_max(table.embed_tokens(summary_tokens))
    return clf.probability(np.concatenate([t_vec, d_vec]))


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0 for _ in values]
    return [(v - lo) / (hi - lo) for v in values]


def rank(
    transcript: Transcript,
    pool: TutorialPool,
    ontology: ToolOntology,
    stats: CooccurrenceStats,
    summarizer_model: SummarizerModel,
    discourse: DiscourseClassifier,
    table: EmbeddingTable,
    filter_config: FilterConfig,
    normalize: bool = False,
) -> RankedList:
    """Filter, summarize, score, sort.

    With ``normalize`` each score component is min-max rescaled over the
    candidate set before summing (both components then live in [0, 1]).
    """
    candidates = filter_pool(transcript, pool, ontology, stats, filter_config)
    summary = summarize(transcript, summarizer_model)
    str_scores = [score_str(t, summary.tokens, table) for t in candidates]
    disc_scores = [score_disc(discourse, t, summary.tokens, table) for t in candidates]
    if normalize and candidates:
        str_scores = _minmax(str_scores)
        disc_scores = _minmax(disc_scores)
    return make_ranked_list(
        [(t.id, s, d) for t, s, d in zip(candidates, str_scores, disc_scores)]
    )


# ---------------------------------------------------------------------------
# checkpointing


def save_discourse(path: str | Path, clf: DiscourseClassifier) -> None:
    save_checkpoint(path, "discourse", clf.params())


def load_discourse(path: str | Path) -> DiscourseClassifier:
    kind, arrays, _ = load_checkpoint(path)
    if kind != "discourse":
        raise ValueError(f"{path}: expected a discourse checkpoint, found {kind!r}")
    return DiscourseClassifier(arrays["v"], arrays["c"], arrays["u"], arrays["b"])
