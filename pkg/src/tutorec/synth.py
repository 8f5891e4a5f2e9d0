"""Synthetic corpus generator with planted ground truth.

Every tutorial owns a distinct (disjoint when the tool vocabulary allows)
subset of tool names; every transcript is assigned a gold tutorial and mixes
mentions of that tutorial's tools with shared chitchat tokens at the
configured noise rate. When noise is below 1 each transcript mentions all
of its gold tutorial's tools at least once, which guarantees the keyword
baseline recovers the gold tutorial at rank 1 on a noiseless corpus.

The emitted embedding file clusters all tool tokens of one tutorial around
a shared basis direction (chitchat and title framing words get their own
directions), so embedding-based scores carry a learnable signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import (
    AnnotationRecord,
    Phrase,
    Sentence,
    ToolOntology,
    Transcript,
    Tutorial,
    TutorialKind,
    TutorialPool,
    annotation_record,
    make_tutorial,
    phrase_in_tokens,
    transcript_record,
    tutorial_record,
    write_jsonl,
    write_ontology,
)
from .embed import EmbeddingTable

_FRAME_TOKENS = ("using", "how", "to")
_JITTER = 0.05


@dataclass
class SynthConfig:
    num_tutorials: int = 20
    num_transcripts: int = 50
    tools_per_tutorial: int = 3
    transcript_length: int = 60
    noise_rate: float = 0.2
    chitchat_vocab_size: int = 40
    tool_vocab_size: int = 60
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("num_tutorials", "num_transcripts", "tools_per_tutorial",
                     "transcript_length", "chitchat_vocab_size", "tool_vocab_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")
        if self.tools_per_tutorial > self.tool_vocab_size:
            raise ValueError("tools_per_tutorial cannot exceed tool_vocab_size")


@dataclass
class SynthCorpus:
    config: SynthConfig
    transcripts: list[Transcript]
    pool: TutorialPool
    ontology: ToolOntology
    annotations: list[AnnotationRecord]
    gold_by_transcript: dict[str, str]
    embedding_dim: int
    embedding_vectors: dict[str, np.ndarray] = field(repr=False, default_factory=dict)

    def embedding_table(self) -> EmbeddingTable:
        return EmbeddingTable(dim=self.embedding_dim, vectors=dict(self.embedding_vectors))


def _tool_phrases(count: int) -> list[Phrase]:
    phrases: list[Phrase] = []
    for i in range(count):
        if i % 5 == 2:
            phrases.append((f"tool{i:03d}", f"kit{i:03d}"))
        else:
            phrases.append((f"tool{i:03d}",))
    return phrases


def _tool_subsets(config: SynthConfig, rng: np.random.Generator) -> list[list[int]]:
    """One distinct tool-index subset per tutorial, disjoint when possible."""
    need = config.num_tutorials * config.tools_per_tutorial
    if need <= config.tool_vocab_size:
        order = [int(i) for i in rng.permutation(config.tool_vocab_size)]
        return [
            sorted(order[i * config.tools_per_tutorial:(i + 1) * config.tools_per_tutorial])
            for i in range(config.num_tutorials)
        ]
    if math.comb(config.tool_vocab_size, config.tools_per_tutorial) < config.num_tutorials:
        raise ValueError(
            f"cannot pick {config.num_tutorials} distinct tool subsets of size "
            f"{config.tools_per_tutorial} from {config.tool_vocab_size} tool names"
        )
    subsets: list[list[int]] = []
    seen: set[tuple[int, ...]] = set()
    attempts = 0
    while len(subsets) < config.num_tutorials:
        attempts += 1
        if attempts > 1000 * config.num_tutorials:
            raise ValueError("could not sample enough distinct tool subsets")
        pick = sorted(int(i) for i in rng.choice(
            config.tool_vocab_size, size=config.tools_per_tutorial, replace=False
        ))
        key = tuple(pick)
        if key not in seen:
            seen.add(key)
            subsets.append(pick)
    return subsets


def generate_corpus(config: SynthConfig) -> SynthCorpus:
    """Build the planted corpus: transcripts, pool, ontology, gold links,
    and a consistent synthetic embedding vocabulary.
    """
    rng = np.random.default_rng(config.seed)
    phrases = _tool_phrases(config.tool_vocab_size)
    chit_tokens = [f"chat{i:03d}" for i in range(config.chitchat_vocab_size)]
    subsets = _tool_subsets(config, rng)

    # feasibility: below full noise every gold tool must fit in the transcript
    if config.noise_rate < 1.0:
        worst = max(sum(len(phrases[i]) for i in subset) for subset in subsets)
        if worst > config.transcript_length:
            raise ValueError(
                f"transcript_length {config.transcript_length} cannot cover the "
                f"{worst} tokens of one tutorial's tool mentions"
            )

    tutorials = []
    for t, subset in enumerate(subsets):
        kind = TutorialKind.USING if t % 2 == 0 else TutorialKind.HOWTO
        first = " ".join(phrases[subset[0]])
        title = f"using {first}" if kind is TutorialKind.USING else f"how to {first}"
        body_tokens: list[str] = []
        for tool_idx in subset:
            body_tokens.extend(phrases[tool_idx])
            body_tokens.append(chit_tokens[int(rng.integers(0, len(chit_tokens)))])
        tutorials.append(make_tutorial(f"tut{t:03d}", kind, title, " ".join(body_tokens)))
    pool = TutorialPool(tuple(tutorials) + (
        Tutorial("none", TutorialKind.NONE, "", (), ()),
    ))

    transcripts: list[Transcript] = []
    annotations: list[AnnotationRecord] = []
    gold_by_transcript: dict[str, str] = {}
    for v in range(config.num_transcripts):
        gold = v % config.num_tutorials
        gold_phrases = [phrases[i] for i in subsets[gold]]
        units: list[list[str]] = []
        if config.noise_rate < 1.0:
            for i in rng.permutation(len(gold_phrases)):
                units.append(list(gold_phrases[int(i)]))
        total = sum(len(u) for u in units)
        while total < config.transcript_length:
            if rng.random() < config.noise_rate:
                unit = [chit_tokens[int(rng.integers(0, len(chit_tokens)))]]
            else:
                unit = list(gold_phrases[int(rng.integers(0, len(gold_phrases)))])
            units.append(unit)
            total += len(unit)

        sentences: list[Sentence] = []
        current: list[str] = []
        target = int(rng.integers(5, 10))
        for unit in units:
            current.extend(unit)
            if len(current) >= target:
                sentences.append(Sentence(len(sentences), " ".join(current), tuple(current)))
                current = []
                target = int(rng.integers(5, 10))
        if current:
            sentences.append(Sentence(len(sentences), " ".join(current), tuple(current)))

        tid = f"vid{v:03d}"
        transcripts.append(Transcript(id=tid, sentences=tuple(sentences)))
        gold_by_transcript[tid] = f"tut{gold:03d}"
        for sentence in sentences:
            if any(phrase_in_tokens(p, sentence.tokens) for p in gold_phrases):
                annotations.append(AnnotationRecord(tid, sentence.index, (f"tut{gold:03d}",)))

    dim = config.num_tutorials + 4
    vectors: dict[str, np.ndarray] = {}

    def _cluster_vector(axis: int) -> np.ndarray:
        vec = _JITTER * rng.standard_normal(dim)
        vec[axis] += 1.0
        return vec

    owner: dict[int, int] = {}
    for t, subset in enumerate(subsets):
        for tool_idx in subset:
            owner.setdefault(tool_idx, t)
    for tool_idx, phrase in enumerate(phrases):
        axis = owner.get(tool_idx, config.num_tutorials + 2)
        for token in phrase:
            if token not in vectors:
                vectors[token] = _cluster_vector(axis)
    for token in chit_tokens:
        vectors[token] = _cluster_vector(config.num_tutorials)
    for token in _FRAME_TOKENS:
        vectors[token] = _cluster_vector(config.num_tutorials + 1)

    return SynthCorpus(
        config=config,
        transcripts=transcripts,
        pool=pool,
        ontology=ToolOntology(frozenset(phrases)),
        annotations=annotations,
        gold_by_transcript=gold_by_transcript,
        embedding_dim=dim,
        embedding_vectors=vectors,
    )


def write_corpus(corpus: SynthCorpus, out_dir: str | Path) -> dict[str, Path]:
    """Write the corpus in the standard on-disk formats; byte-identical for
    a fixed config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "transcripts": out / "transcripts.jsonl",
        "tutorials": out / "tutorials.jsonl",
        "ontology": out / "ontology.txt",
        "annotations": out / "annotations.jsonl",
        "embeddings": out / "embeddings.txt",
    }
    write_jsonl(paths["transcripts"], (transcript_record(t) for t in corpus.transcripts))
    write_jsonl(paths["tutorials"], (tutorial_record(t) for t in corpus.pool.tutorials))
    write_ontology(paths["ontology"], corpus.ontology)
    write_jsonl(paths["annotations"], (annotation_record(a) for a in corpus.annotations))
    with open(paths["embeddings"], "w", encoding="utf-8") as fh:
        for token, vec in corpus.embedding_vectors.items():
            fh.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")
    return paths
