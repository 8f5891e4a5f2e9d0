"""Corpus data model: transcripts, tutorials, tool ontology, annotations.

Everything arrives as small line-delimited files (see the ``load_*``
functions for formats). Loading validates eagerly and reports the offending
file and line; loaded objects are immutable and safe to share read-only
between threads.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

NONE_TUTORIAL_ID = "none"

# Unicode letter/digit runs, with ASCII apostrophe contractions kept whole
# ("i'm", "don't"). Underscore is excluded on purpose: it is a word char to
# regex but a separator in practice.
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")

Phrase = tuple[str, ...]


class FormatError(ValueError):
    """An input file violates the expected record format."""


def tokenize(text: str) -> list[str]:
    """Normalize raw text into lowercase tokens.

    Punctuation is split off and discarded, letter/digit runs are kept, and
    apostrophe contractions stay whole. Deterministic; empty input gives an
    empty list. Idempotent: re-tokenizing ``" ".join(tokens)`` returns the
    same tokens.
    """
    return _TOKEN_RE.findall(text.replace("’", "'").lower())


class TutorialKind(str, Enum):
    USING = "using"
    HOWTO = "howto"
    NONE = "none"


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: Phrase


@dataclass(frozen=True)
class Transcript:
    id: str
    sentences: tuple[Sentence, ...]
    source_meta: Mapping[str, str] | None = None

    @property
    def tokens(self) -> Phrase:
        return tuple(t for s in self.sentences for t in s.tokens)

    @property
    def num_tokens(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)


@dataclass(frozen=True)
class Tutorial:
    id: str
    kind: TutorialKind
    title: str
    title_tokens: Phrase
    body_tokens: Phrase

    @property
    def is_none(self) -> bool:
        return self.kind is TutorialKind.NONE

    @property
    def text_tokens(self) -> Phrase:
        """Title and body tokens, in that order."""
        return self.title_tokens + self.body_tokens


def make_tutorial(tutorial_id: str, kind: TutorialKind, title: str, body: str) -> Tutorial:
    return Tutorial(
        id=tutorial_id,
        kind=kind,
        title=title,
        title_tokens=tuple(tokenize(title)),
        body_tokens=tuple(tokenize(body)),
    )


def _none_tutorial() -> Tutorial:
    return Tutorial(NONE_TUTORIAL_ID, TutorialKind.NONE, "", (), ())


@dataclass
class TutorialPool:
    """All candidate tutorials plus exactly one no-link pseudo-entry.

    The pseudo-entry gives the supervised label space a uniform shape; it is
    excluded from every unsupervised ranking via :attr:`real`.
    """

    tutorials: tuple[Tutorial, ...]
    _by_id: dict[str, Tutorial] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        nones = [t for t in self.tutorials if t.is_none]
        if len(nones) != 1:
            raise ValueError(f"pool must contain exactly one no-link entry, found {len(nones)}")
        if nones[0].body_tokens:
            raise ValueError("the no-link pool entry must have an empty body")
        by_id: dict[str, Tutorial] = {}
        for t in self.tutorials:
            if t.id in by_id:
                raise ValueError(f"duplicate tutorial id {t.id!r}")
            if not t.is_none and not t.body_tokens:
                raise ValueError(f"tutorial {t.id!r} has an empty body")
            by_id[t.id] = t
        if len(by_id) < 2:
            raise ValueError("pool needs at least one tutorial besides the no-link entry")
        self._by_id = by_id

    @property
    def real(self) -> tuple[Tutorial, ...]:
        return tuple(t for t in self.tutorials if not t.is_none)

    @property
    def none(self) -> Tutorial:
        return next(t for t in self.tutorials if t.is_none)

    def get(self, tutorial_id: str) -> Tutorial:
        try:
            return self._by_id[tutorial_id]
        except KeyError:
            raise KeyError(f"unknown tutorial id {tutorial_id!r}") from None

    def __contains__(self, tutorial_id: str) -> bool:
        return tutorial_id in self._by_id


@dataclass(frozen=True)
class ToolOntology:
    """Normalized multi-token tool-name phrases used as domain knowledge."""

    tool_names: frozenset[Phrase]

    @property
    def phrases(self) -> tuple[Phrase, ...]:
        """Deterministically ordered view of the phrase set."""
        return tuple(sorted(self.tool_names))


@dataclass(frozen=True)
class AnnotationRecord:
    transcript_id: str
    sentence_index: int
    linked_tutorial_ids: tuple[str, ...]


# ---------------------------------------------------------------------------
# phrase matching


def phrase_in_tokens(phrase: Sequence[str], tokens: Sequence[str]) -> bool:
    """True when ``phrase`` occurs as a contiguous subsequence of ``tokens``."""
    k = len(phrase)
    if k == 0 or k > len(tokens):
        return False
    first = phrase[0]
    probe = tuple(phrase)
    for i in range(len(tokens) - k + 1):
        if tokens[i] == first and tuple(tokens[i:i + k]) == probe:
            return True
    return False


def tool_names_in_tokens(ontology: ToolOntology, tokens: Sequence[str]) -> set[Phrase]:
    """All ontology phrases occurring contiguously in ``tokens``.

    Each phrase matches independently; a longer match never suppresses a
    shorter distinct phrase.
    """
    return {p for p in ontology.tool_names if phrase_in_tokens(p, tokens)}


def match_tool_names(transcript: Transcript, ontology: ToolOntology) -> set[Phrase]:
    """Tool names mentioned anywhere in the transcript's token stream."""
    return tool_names_in_tokens(ontology, transcript.tokens)


# ---------------------------------------------------------------------------
# loading


def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise FormatError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _require(obj: dict, key: str, typ: type, where: str):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, typ):
        raise FormatError(f"{where}: field {key!r} must be {typ.__name__}")
    return value


def load_transcripts(path: str | Path) -> list[Transcript]:
    """Load ``transcripts.jsonl``: one ``{"id", "sentences"}`` object per line.

    Sentences that normalize to zero tokens are dropped and the remaining
    sentences reindexed from zero. A transcript must keep at least one
    sentence; ids must be unique.
    """
    transcripts: list[Transcript] = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        where = f"{path}:{lineno}"
        tid = _require(obj, "id", str, where)
        if not tid:
            raise FormatError(f"{where}: empty transcript id")
        if tid in seen:
            raise FormatError(f"{where}: duplicate transcript id {tid!r}")
        seen.add(tid)
        raw_sentences = _require(obj, "sentences", list, where)
        sentences: list[Sentence] = []
        for raw in raw_sentences:
            if not isinstance(raw, str):
                raise FormatError(f"{where}: sentences must be strings")
            tokens = tuple(tokenize(raw))
            if not tokens:
                continue
            sentences.append(Sentence(index=len(sentences), text=raw, tokens=tokens))
        if not sentences:
            raise FormatError(f"{where}: transcript {tid!r} has no usable sentences")
        meta = obj.get("meta")
        transcripts.append(Transcript(id=tid, sentences=tuple(sentences), source_meta=meta))
    if not transcripts:
        raise FormatError(f"{path}: no transcripts found")
    return transcripts


_KINDS = {"using": TutorialKind.USING, "howto": TutorialKind.HOWTO, "none": TutorialKind.NONE}


def load_tutorial_pool(path: str | Path) -> TutorialPool:
    """Load ``tutorials.jsonl``; appends the no-link entry when absent."""
    tutorials: list[Tutorial] = []
    have_none = False
    for lineno, obj in _iter_jsonl(path):
        where = f"{path}:{lineno}"
        tid = _require(obj, "id", str, where)
        kind_raw = _require(obj, "kind", str, where)
        if kind_raw not in _KINDS:
            raise FormatError(f"{where}: unknown tutorial kind {kind_raw!r}")
        kind = _KINDS[kind_raw]
        title = _require(obj, "title", str, where)
        body = _require(obj, "body", str, where)
        tut = make_tutorial(tid, kind, title, body)
        if not tut.is_none and not tut.body_tokens:
            raise FormatError(f"{where}: tutorial {tid!r} has an empty body")
        have_none = have_none or tut.is_none
        tutorials.append(tut)
    if not tutorials:
        raise FormatError(f"{path}: no tutorials found")
    if not have_none:
        if any(t.id == NONE_TUTORIAL_ID for t in tutorials):
            raise FormatError(
                f"{path}: tutorial id {NONE_TUTORIAL_ID!r} is reserved for the no-link entry"
            )
        tutorials.append(_none_tutorial())
    try:
        return TutorialPool(tuple(tutorials))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def load_ontology(path: str | Path) -> ToolOntology:
    """Load ``ontology.txt``: one tool phrase per line, UTF-8."""
    phrases: set[Phrase] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            phrase = tuple(tokenize(line))
            if not phrase:
                raise FormatError(f"{path}:{lineno}: phrase normalizes to nothing")
            phrases.add(phrase)
    if not phrases:
        raise FormatError(f"{path}: ontology is empty")
    return ToolOntology(frozenset(phrases))


def load_annotations(
    path: str | Path,
    transcripts: Sequence[Transcript],
    pool: TutorialPool,
) -> list[AnnotationRecord]:
    """Load ``annotations.jsonl`` and cross-validate against corpus and pool."""
    by_id = {t.id: t for t in transcripts}
    records: list[AnnotationRecord] = []
    for lineno, obj in _iter_jsonl(path):
        where = f"{path}:{lineno}"
        tid = _require(obj, "transcript_id", str, where)
        if tid not in by_id:
            raise FormatError(f"{where}: unknown transcript id {tid!r}")
        sidx = _require(obj, "sentence_index", int, where)
        if not 0 <= sidx < len(by_id[tid].sentences):
            raise FormatError(f"{where}: sentence index {sidx} out of range for {tid!r}")
        linked = _require(obj, "tutorials", list, where)
        if not linked:
            raise FormatError(f"{where}: empty tutorial link list")
        for lid in linked:
            if not isinstance(lid, str) or lid not in pool:
                raise FormatError(f"{where}: unknown tutorial id {lid!r}")
        records.append(AnnotationRecord(tid, sidx, tuple(linked)))
    return records


# ---------------------------------------------------------------------------
# serialization (inverse of the loaders, up to dropped empty sentences)


def transcript_record(t: Transcript) -> dict:
    rec: dict = {"id": t.id, "sentences": [s.text for s in t.sentences]}
    if t.source_meta:
        rec["meta"] = dict(t.source_meta)
    return rec


def tutorial_record(t: Tutorial) -> dict:
    return {
        "id": t.id,
        "kind": t.kind.value,
        "title": t.title,
        "body": " ".join(t.body_tokens),
    }


def annotation_record(a: AnnotationRecord) -> dict:
    return {
        "transcript_id": a.transcript_id,
        "sentence_index": a.sentence_index,
        "tutorials": list(a.linked_tutorial_ids),
    }


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def write_ontology(path: str | Path, ontology: ToolOntology) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for phrase in ontology.phrases:
            fh.write(" ".join(phrase) + "\n")
