"""Document-level co-occurrence statistics and the PMI similarity score.

Counts are document-level: a transcript contributes at most one to any
unigram or pair count no matter how often a token repeats inside it. The
word-pair association score is ``log(pair / (count_i * count_j))`` over
those counts, with never-co-occurring (or unknown) pairs scored 0 so they
stay neutral instead of diverging to -inf. Transcript/tutorial similarity
averages the pairwise scores over all token-occurrence pairs.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus import FormatError, Transcript

_STATS_MAGIC = "TUTOREC-STATS 1"


@dataclass
class CooccurrenceStats:
    num_docs: int
    doc_count: dict[str, int]
    pair_count: dict[tuple[str, str], int]  # keys sorted (a <= b), self-pairs omitted

    def unigram(self, token: str) -> int:
        return self.doc_count.get(token, 0)

    def pair(self, a: str, b: str) -> int:
        if a == b:
            # a document containing a token trivially contains the pair (a, a)
            return self.doc_count.get(a, 0)
        key = (a, b) if a < b else (b, a)
        return self.pair_count.get(key, 0)

    @property
    def vocab(self) -> tuple[str, ...]:
        return tuple(sorted(self.doc_count))


def build_stats(transcripts: Sequence[Transcript]) -> CooccurrenceStats:
    """Count per-document token and token-pair occurrences.

    Raises ValueError on an empty transcript list.
    """
    if not transcripts:
        raise ValueError("cannot build co-occurrence stats from zero transcripts")
    doc_count: Counter[str] = Counter()
    pair_count: Counter[tuple[str, str]] = Counter()
    for t in transcripts:
        uniq = sorted(set(t.tokens))
        doc_count.update(uniq)
        for i, a in enumerate(uniq):
            for b in uniq[i + 1:]:
                pair_count[(a, b)] += 1
    return CooccurrenceStats(
        num_docs=len(transcripts),
        doc_count=dict(doc_count),
        pair_count=dict(pair_count),
    )


def pmi(stats: CooccurrenceStats, w_i: str, w_j: str) -> float:
    """Association of two words: ``log(pair / (count_i * count_j))``.

    0 when the pair never co-occurs or either word is unknown.
    """
    joint = stats.pair(w_i, w_j)
    if joint == 0:
        return 0.0
    c_i = stats.unigram(w_i)
    c_j = stats.unigram(w_j)
    if c_i == 0 or c_j == 0:
        return 0.0
    return math.log(joint / (c_i * c_j))


def pmi_similarity(
    stats: CooccurrenceStats,
    d_tokens: Sequence[str],
    t_tokens: Sequence[str],
) -> float:
    """Mean pairwise association between two token sequences.

    Sums ``pmi`` over every (occurrence, occurrence) pair and divides by
    ``len(d_tokens) * len(t_tokens)``. Occurrences count: a token repeated in
    either sequence weighs in repeatedly.
    """
    n = len(d_tokens)
    m = len(t_tokens)
    if n == 0 or m == 0:
        raise ValueError("similarity needs non-empty token sequences")
    d_counts = Counter(d_tokens)
    t_counts = Counter(t_tokens)
    total = 0.0
    for w, fw in d_counts.items():
        for v, fv in t_counts.items():
            total += fw * fv * pmi(stats, w, v)
    return total / (n * m)


# ---------------------------------------------------------------------------
# cache file


def corpus_content_hash(transcripts: Sequence[Transcript]) -> str:
    """Stable hash of transcript ids and token content."""
    payload = json.dumps(
        [[t.id, list(t.tokens)] for t in transcripts],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_stats(stats: CooccurrenceStats, path: str | Path, corpus_hash: str = "") -> None:
    """Write stats as a line-based cache: header, vocab counts, sparse pairs."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_STATS_MAGIC + "\n")
        fh.write(f"corpus_hash {corpus_hash}\n")
        fh.write(f"num_docs {stats.num_docs}\n")
        fh.write(f"vocab {len(stats.doc_count)}\n")
        for token in sorted(stats.doc_count):
            fh.write(f"{token} {stats.doc_count[token]}\n")
        fh.write(f"pairs {len(stats.pair_count)}\n")
        for (a, b) in sorted(stats.pair_count):
            fh.write(f"{a} {b} {stats.pair_count[(a, b)]}\n")


def load_stats(path: str | Path) -> tuple[CooccurrenceStats, str]:
    """Read a stats cache; returns the stats and the stored corpus hash."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _STATS_MAGIC:
        raise FormatError(f"{path}: not a stats cache file")
    try:
        corpus_hash = lines[1].split(" ", 1)[1] if " " in lines[1] else ""
        num_docs = int(lines[2].split()[1])
        vocab_size = int(lines[3].split()[1])
        doc_count: dict[str, int] = {}
        at = 4
        for line in lines[at:at + vocab_size]:
            token, count = line.rsplit(" ", 1)
            doc_count[token] = int(count)
        at += vocab_size
        pair_total = int(lines[at].split()[1])
        at += 1
        pair_count: dict[tuple[str, str], int] = {}
        for line in lines[at:at + pair_total]:
            a, b, count = line.split(" ")
            pair_count[(a, b)] = int(count)
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: corrupt stats cache ({exc})") from None
    return CooccurrenceStats(num_docs, doc_count, pair_count), corpus_hash
