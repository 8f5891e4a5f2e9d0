"""Sentence-level tutorial link classifier.

Each (sentence, tutorial-title) pair gets a binary relevance probability
from a small feed-forward head over a pooled pair encoding. The pool's
no-link pseudo-entry takes part like any other tutorial, so "this sentence
links to nothing" is just another label. Encodings come either from the
static embedding table (max-pooled sentence segment concatenated with a
max-pooled title segment) or from a file of precomputed pair vectors, which
lets contextual encoders plug in from outside.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    AnnotationRecord,
    FormatError,
    Sentence,
    Transcript,
    Tutorial,
    TutorialPool,
)
from .embed import EmbeddingTable, pool_max
from .nn import (
    PairClassifier,
    TrainConfig,
    check_finite,
    clamp_probability,
    load_checkpoint,
    save_checkpoint,
    sgd_step,
)

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-7


class PooledStaticEncoder:
    """Concatenated max-pools of sentence and title embeddings.

    The title segment of the no-link entry (empty title) is the zero vector.
    """

    name = "pooled_static"

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.dim = 2 * table.dim

    def encode_tokens(self, sentence_tokens: Sequence[str],
                      title_tokens: Sequence[str]) -> np.ndarray:
        left = pool_max(self.table.embed_tokens(sentence_tokens))
        if title_tokens:
            right = pool_max(self.table.embed_tokens(title_tokens))
        else:
            right = np.zeros(self.table.dim)
        return np.concatenate([left, right])

    def encode(self, transcript_id: str, sentence: Sentence, tutorial: Tutorial) -> np.ndarray:
        return self.encode_tokens(sentence.tokens, tutorial.title_tokens)


class ExternalPairVectorEncoder:
    """Precomputed pair vectors keyed by (transcript, sentence, tutorial).

    File format: ``transcript_id sentence_index tutorial_id v1 ... vd``.
    """

    name = "external_pair_vectors"

    def __init__(self, dim: int, vectors: dict[tuple[str, int, str], np.ndarray]):
        self.dim = dim
        self.vectors = vectors

    def encode(self, transcript_id: str, sentence: Sentence, tutorial: Tutorial) -> np.ndarray:
        key = (transcript_id, sentence.index, tutorial.id)
        try:
            return self.vectors[key]
        except KeyError:
            raise KeyError(f"no pair vector for key {key!r}") from None


def load_pair_vectors(path: str | Path) -> ExternalPairVectorEncoder:
    vectors: dict[tuple[str, int, str], np.ndarray] = {}
    dim = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 4:
                raise FormatError(f"{path}:{lineno}: expected ids, index and values")
            tid, sidx_raw, tut_id, values = parts[0], parts[1], parts[2], parts[3:]
            if dim == 0:
                dim = len(values)
            if len(values) != dim:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, found {len(values)}")
            try:
                key = (tid, int(sidx_raw), tut_id)
                vectors[key] = np.array([float(v) for v in values])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed index or value") from None
    if not vectors:
        raise FormatError(f"{path}: empty pair-vector file")
    return ExternalPairVectorEncoder(dim, vectors)


def encode_pair(encoder, sentence_tokens: Sequence[str],
                title_tokens: Sequence[str]) -> np.ndarray:
    """Token-level pair encoding (pooled backends only)."""
    return encoder.encode_tokens(sentence_tokens, title_tokens)


@dataclass
class LinkClassifier:
    encoder: object
    head: PairClassifier
    decision_threshold: float = 0.5
    negative_ratio: int = 3

    def __post_init__(self) -> None:
        if not 0.0 < self.decision_threshold < 1.0:
            raise ValueError("decision_threshold must lie in (0, 1)")
        if self.negative_ratio < 1:
            raise ValueError("negative_ratio must be >= 1")


def _linked_by_sentence(
    annotations: Sequence[AnnotationRecord],
    none_id: str,
) -> dict[tuple[str, int], set[str]]:
    linked: dict[tuple[str, int], set[str]] = {}
    for rec in annotations:
        key = (rec.transcript_id, rec.sentence_index)
        linked.setdefault(key, set()).update(rec.linked_tutorial_ids)
    for key, ids in linked.items():
        ids.discard(none_id)
    return linked


def build_training_pairs(
    annotations: Sequence[AnnotationRecord],
    transcripts: Sequence[Transcript],
    pool: TutorialPool,
    negative_ratio: int,
    rng: np.random.Generator,
) -> list[tuple[str, Sentence, Tutorial, int]]:
    """Positive and sampled-negative (sentence, tutorial) training pairs.

    Annotated sentences pair positively with each linked tutorial; sentences
    never linked to anything pair positively with the no-link entry. Every
    sentence also gets ``negative_ratio`` sampled non-linked tutorials as
    negatives (deduplicated, uniform without replacement).
    """
    none_id = pool.none.id
    linked = _linked_by_sentence(annotations, none_id)
    all_ids = sorted(t.id for t in pool.tutorials)
    pairs: list[tuple[str, Sentence, Tutorial, int]] = []
    for transcript in transcripts:
        for sentence in transcript.sentences:
            key = (transcript.id, sentence.index)
            gold = linked.get(key) or set()
            positives = sorted(gold) if gold else [none_id]
            for tid in positives:
                pairs.append((transcript.id, sentence, pool.get(tid), 1))
            eligible = [tid for tid in all_ids if tid not in gold and tid not in positives]
            take = min(negative_ratio, len(eligible))
            if take > 0:
                picks = rng.choice(len(eligible), size=take, replace=False)
                for idx in sorted(int(i) for i in picks):
                    pairs.append((transcript.id, sentence, pool.get(eligible[idx]), 0))
    return pairs


def train_link_classifier(
    annotations: Sequence[AnnotationRecord],
    transcripts: Sequence[Transcript],
    pool: TutorialPool,
    encoder,
    config: TrainConfig,
    negative_ratio: int = 3,
    decision_threshold: float = 0.5,
) -> tuple[LinkClassifier, list[float]]:
    """Train the link head with per-pair binary cross-entropy.

    Deterministic under the config seed (negative sampling and epoch
    shuffling both draw from the same generator).
    """
    if not annotations:
        raise ValueError("link-classifier training needs at least one annotation")
    rng = np.random.default_rng(config.seed)
    pairs = build_training_pairs(annotations, transcripts, pool, negative_ratio, rng)
    encoded = [encoder.encode(tid, sentence, tutorial) for tid, sentence, tutorial, _ in pairs]
    labels = [label for _, _, _, label in pairs]

    head = PairClassifier.create(encoder.dim, config.hidden_dim, rng)
    history: list[float] = []
    n = len(pairs)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for i in order:
            total += _bce_step(head, encoded[i], labels[i], config.learning_rate)
        history.append(total / n)
    model = LinkClassifier(encoder, head, decision_threshold, negative_ratio)
    return model, history


def _bce_step(head: PairClassifier, x: np.ndarray, label: int, learning_rate: float) -> float:
    p, t = head.forward(x)
    cp = clamp_probability(p)
    loss = -math.log(cp) if label else -math.log(1.0 - cp)
    check_finite(loss, "link cross-entropy")
    if PROB_CLAMP < p < 1.0 - PROB_CLAMP:
        dp = -1.0 / cp if label else 1.0 / (1.0 - cp)
    else:
        dp = 0.0
    grads, _ = head.backward(x, t, p, dp)
    sgd_step(head.params(), grads, learning_rate)
    return loss


# ---------------------------------------------------------------------------
# inference


def predict_links(
    model: LinkClassifier,
    transcript_id: str,
    sentence: Sentence,
    pool: TutorialPool,
) -> list[tuple[str, float]]:
    """Probability for every pool entry (no-link included), best first.

    Ties break by tutorial id ascending.
    """
    scored = [
        (tutorial.id, model.head.probability(model.encoder.encode(transcript_id, sentence, tutorial)))
        for tutorial in pool.tutorials
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored


def predicted_tutorial_ids(
    ranked: Sequence[tuple[str, float]],
    none_id: str,
    decision_threshold: float,
) -> list[str]:
    """Tutorial ids the sentence is predicted to link to.

    A tutorial counts when its probability clears the decision threshold and
    beats the no-link probability; a sentence with no such tutorial is
    predicted unlinked.
    """
    p_none = next(p for tid, p in ranked if tid == none_id)
    return [
        tid for tid, p in ranked
        if tid != none_id and p > decision_threshold and p > p_none
    ]


def prediction_record(transcript_id: str, sentence_index: int,
                      ranked: Sequence[tuple[str, float]]) -> dict:
    return {
        "transcript_id": transcript_id,
        "sentence_index": sentence_index,
        "ranked": [[tid, p] for tid, p in ranked],
    }


# ---------------------------------------------------------------------------
# checkpointing


def save_link_classifier(path: str | Path, model: LinkClassifier) -> None:
    save_checkpoint(
        path,
        "supervised",
        model.head.params(),
        {
            "decision_threshold": model.decision_threshold,
            "negative_ratio": model.negative_ratio,
            "encoder": getattr(model.encoder, "name", "pooled_static"),
        },
    )


def load_link_classifier(path: str | Path, encoder) -> LinkClassifier:
    kind, arrays, meta = load_checkpoint(path)
    if kind != "supervised":
        raise ValueError(f"{path}: expected a supervised checkpoint, found {kind!r}")
    head = PairClassifier(arrays["v"], arrays["c"], arrays["u"], arrays["b"])
    return LinkClassifier(
        encoder,
        head,
        float(meta["decision_threshold"]),
        int(meta["negative_ratio"]),
    )
