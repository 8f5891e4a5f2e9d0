"""Candidate filtering over the tutorial pool.

Two criteria prune the pool before ranking: a domain-knowledge filter that
keeps tutorials mentioning a tool name detected in the transcript, and a
co-occurrence similarity threshold. Their intersection is the candidate
set; when it comes up short it is topped up with the highest-similarity
leftovers so ranking always has something to work with.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import ToolOntology, Transcript, Tutorial, TutorialPool, match_tool_names, phrase_in_tokens
from .stats import CooccurrenceStats, pmi_similarity


@dataclass
class FilterConfig:
    """Pruning knobs.

    ``delta`` is the strict similarity cutoff. The co-occurrence score as
    defined never exceeds zero (a never-co-occurring pair scores exactly 0),
    so any non-negative cutoff removes the whole pool; the default of -inf
    disables similarity pruning until a corpus-specific value is tuned.
    ``fallback_min_keep`` is the minimum candidate count, met by topping up
    with the highest-similarity excluded tutorials.
    """

    delta: float = float("-inf")
    fallback_min_keep: int = 5

    def __post_init__(self) -> None:
        if self.fallback_min_keep < 1:
            raise ValueError("fallback_min_keep must be >= 1")


def filter_dk(transcript: Transcript, pool: TutorialPool,
              ontology: ToolOntology) -> list[Tutorial]:
    """Keep tutorials whose title or body mentions a tool name from the transcript.

    When the transcript mentions no known tool name at all, the whole pool is
    kept: an empty mention set carries no evidence against any tutorial.
    """
    mentioned = match_tool_names(transcript, ontology)
    if not mentioned:
        return list(pool.real)
    kept = []
    for tut in pool.real:
        tokens = tut.text_tokens
        if any(phrase_in_tokens(p, tokens) for p in mentioned):
            kept.append(tut)
    return kept


def filter_sim(transcript: Transcript, pool: TutorialPool,
               stats: CooccurrenceStats, delta: float) -> list[Tutorial]:
    """Keep tutorials with co-occurrence similarity strictly above ``delta``."""
    d_tokens = transcript.tokens
    return [
        tut for tut in pool.real
        if pmi_similarity(stats, d_tokens, tut.body_tokens) > delta
    ]


def filter_pool(transcript: Transcript, pool: TutorialPool, ontology: ToolOntology,
                stats: CooccurrenceStats, config: FilterConfig) -> list[Tutorial]:
    """Intersect both filters, then top up to ``fallback_min_keep`` if needed.

    The no-link pseudo-tutorial never appears in the result. Top-up picks
    excluded tutorials by descending similarity, ties broken by id.
    """
    d_tokens = transcript.tokens
    sims = {tut.id: pmi_similarity(stats, d_tokens, tut.body_tokens) for tut in pool.real}
    dk_ids = {tut.id for tut in filter_dk(transcript, pool, ontology)}
    kept = [tut for tut in pool.real if tut.id in dk_ids and sims[tut.id] > config.delta]
    min_keep = min(config.fallback_min_keep, len(pool.real))
    if len(kept) < min_keep:
        kept_ids = {tut.id for tut in kept}
        excluded = [tut for tut in pool.real if tut.id not in kept_ids]
        excluded.sort(key=lambda tut: (-sims[tut.id], tut.id))
        kept = kept + excluded[:min_keep - len(kept)]
    return kept
