import numpy as np
import pytest

from tutorec.corpus import (
    Sentence,
    ToolOntology,
    Transcript,
    Tutorial,
    TutorialKind,
    TutorialPool,
)


def make_transcript(tid: str, *sentence_tokens: list[str]) -> Transcript:
    sentences = tuple(
        Sentence(index=i, text=" ".join(tokens), tokens=tuple(tokens))
        for i, tokens in enumerate(sentence_tokens)
    )
    return Transcript(id=tid, sentences=sentences)


def make_tutorial(tid: str, body_tokens: list[str], title: str = "",
                  kind: TutorialKind = TutorialKind.USING) -> Tutorial:
    title_tokens = tuple(title.split()) if title else ()
    return Tutorial(tid, kind, title, title_tokens, tuple(body_tokens))


def make_pool(*tutorials: Tutorial) -> TutorialPool:
    none = Tutorial("none", TutorialKind.NONE, "", (), ())
    return TutorialPool(tuple(tutorials) + (none,))


def make_ontology(*phrases: str) -> ToolOntology:
    return ToolOntology(frozenset(tuple(p.split()) for p in phrases))


class FixedBackend:
    """Embedding backend serving a fixed matrix per transcript id."""

    def __init__(self, dim: int, by_id: dict[str, np.ndarray]):
        self.dim = dim
        self.by_id = by_id

    def token_vectors(self, transcript) -> np.ndarray:
        return self.by_id[transcript.id]


@pytest.fixture
def toy_transcripts():
    # three documents over {a, b, c}; the counting examples trace back here
    return [
        make_transcript("d1", ["a", "b"]),
        make_transcript("d2", ["a", "b"]),
        make_transcript("d3", ["a", "c"]),
    ]


@pytest.fixture
def toy_stats(toy_transcripts):
    from tutorec.stats import build_stats

    return build_stats(toy_transcripts)
