"""Turn raw completion text into a structured extraction outcome.

Completions are messy: tuples arrive wrapped in prose, markdown fences, or
labels, quoted with either quote style, and sometimes carry the extra
relation term. The scanner here finds the first well-formed tuple of 3 or 4
quoted terms and never raises on arbitrary input; everything that is not a
tuple is classified as out-of-context (when a cue phrase appears) or
unparseable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

from .core import Triple, Vocabulary


class OutcomeKind(str, Enum):
    EXTRACTED = "extracted"
    OUT_OF_CONTEXT = "out_of_context"
    UNPARSEABLE = "unparseable"


@dataclass(frozen=True)
class RawQuadruple:
    """A parsed tuple before relation post-processing; relation is the
    optional fourth term."""

    subject: str
    predicate: str
    object: str
    relation: str | None = None


@dataclass(frozen=True)
class ParsedResponse:
    """parse_response output: a quadruple, or a classified failure."""

    kind: OutcomeKind
    quad: RawQuadruple | None
    justification: str | None
    raw_text: str


@dataclass(frozen=True)
class ExtractionOutcome:
    """Final parsed result of one completion; raw_text is always preserved."""

    kind: OutcomeKind
    triple: Triple | None
    justification: str | None
    raw_text: str


# Matched case-insensitively as substrings; overridable via a cue file.
DEFAULT_CUE_PHRASES: tuple[str, ...] = (
    "out of context",
    "outside the predefined",
    "no matching relation",
    "does not match any",
)


def load_cue_phrases(path: str) -> tuple[str, ...]:
    """Cue file: plain text, one phrase per line, blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        phrases = tuple(line.strip() for line in fh if line.strip())
    return phrases or DEFAULT_CUE_PHRASES


_QUOTES = ("'", '"')


def _scan_tuple(text: str, open_idx: int) -> list[str] | None:
    """Try to read a parenthesized tuple of quoted terms starting at the '('
    at open_idx. Returns the terms for 3- or 4-term tuples, else None.
    A doubled quote char inside a term is an escaped literal quote.
    """
    i = open_idx + 1
    n = len(text)
    terms: list[str] = []
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n or text[i] not in _QUOTES:
            return None
        quote = text[i]
        i += 1
        buf: list[str] = []
        closed = False
        while i < n:
            ch = text[i]
            if ch == quote:
                if i + 1 < n and text[i + 1] == quote:
                    buf.append(quote)
                    i += 2
                    continue
                i += 1
                closed = True
                break
            buf.append(ch)
            i += 1
        if not closed:
            return None
        terms.append("".join(buf))
        while i < n and text[i].isspace():
            i += 1
        if i < n and text[i] == ",":
            i += 1
            continue
        if i < n and text[i] == ")":
            return terms if len(terms) in (3, 4) else None
        return None


def parse_response(raw: str, cues: Iterable[str] | None = None) -> ParsedResponse:
    """Scan raw completion text for the first tuple of 3 or 4 quoted terms.

    4-term tuples populate the relation slot. When no tuple is found the text
    is out-of-context if it contains a cue phrase, otherwise unparseable.
    Total function: never raises, whatever the input.
    """
    idx = raw.find("(")
    while idx != -1:
        terms = _scan_tuple(raw, idx)
        if terms is not None and all(t.strip() for t in terms[:3]):
            relation = terms[3] if len(terms) == 4 else None
            if relation is not None and not relation.strip():
                relation = None
            quad = RawQuadruple(terms[0], terms[1], terms[2], relation)
            return ParsedResponse(OutcomeKind.EXTRACTED, quad, None, raw)
        idx = raw.find("(", idx + 1)

    lowered = raw.lower()
    for cue in cues if cues is not None else DEFAULT_CUE_PHRASES:
        if cue.lower() in lowered:
            return ParsedResponse(OutcomeKind.OUT_OF_CONTEXT, None, raw.strip(), raw)
    return ParsedResponse(OutcomeKind.UNPARSEABLE, None, None, raw)


def apply_relation_postprocess(
    quad: RawQuadruple, vocab: Vocabulary, raw_text: str = ""
) -> ExtractionOutcome:
    """Fold the quadruple's relation term into the predicate slot.

    A relation term matching a vocabulary name (case-insensitively) replaces
    the verb-predicate with the canonical name; an unknown relation term makes
    the outcome out-of-context; no relation term passes the predicate through.
    """
    if quad.relation is None:
        triple = Triple(quad.subject, quad.predicate, quad.object)
        return ExtractionOutcome(OutcomeKind.EXTRACTED, triple, None, raw_text)
    rel = vocab.get(quad.relation)
    if rel is None:
        justification = f"relation '{quad.relation.strip()}' is not in the vocabulary"
        return ExtractionOutcome(OutcomeKind.OUT_OF_CONTEXT, None, justification, raw_text)
    triple = Triple(quad.subject, rel.name, quad.object)
    return ExtractionOutcome(OutcomeKind.EXTRACTED, triple, None, raw_text)


def extract_outcome(
    raw: str, vocab: Vocabulary, cues: Iterable[str] | None = None
) -> ExtractionOutcome:
    """parse_response followed by relation post-processing."""
    parsed = parse_response(raw, cues)
    if parsed.kind is OutcomeKind.EXTRACTED:
        assert parsed.quad is not None
        return apply_relation_postprocess(parsed.quad, vocab, raw_text=raw)
    return ExtractionOutcome(parsed.kind, None, parsed.justification, raw)


def _quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def serialize_triple(t: Triple) -> str:
    """Canonical form: ('subject', 'predicate', 'object') with internal
    single quotes doubled. parse_response on the output recovers t exactly.
    """
    return f"({_quote(t.subject)}, {_quote(t.predicate)}, {_quote(t.object)})"


def outcome_to_dict(record_id: str, outcome: ExtractionOutcome, error: str | None = None) -> dict[str, Any]:
    """JSONL row for an outcomes file, keyed by record id."""
    row: dict[str, Any] = {"id": record_id, "kind": outcome.kind.value}
    if outcome.triple is not None:
        row["subject"] = outcome.triple.subject
        row["predicate"] = outcome.triple.predicate
        row["object"] = outcome.triple.object
    if outcome.justification is not None:
        row["justification"] = outcome.justification
    row["raw_text"] = outcome.raw_text
    if error is not None:
        row["error"] = error
    return row


def outcome_from_dict(row: dict[str, Any]) -> ExtractionOutcome:
    kind = OutcomeKind(row["kind"])
    triple = None
    if kind is OutcomeKind.EXTRACTED:
        triple = Triple(row["subject"], row["predicate"], row["object"])
    return ExtractionOutcome(kind, triple, row.get("justification"), row.get("raw_text", ""))
