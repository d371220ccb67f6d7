"""Domain types and the text-matching primitives everything else builds on.

Terms are compared after a light normalization (lowercase, edge punctuation
stripped, ordinal day suffixes removed) so that e.g. "November 14th" and
"November 14" count as the same date mention. Containment between terms is
contiguous at the token level, in either direction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import EmptyVocabulary, SchemaError

# Stripped only at token edges; internal hyphens/slashes keep date forms
# like 14/11/1979 as a single token.
_EDGE_PUNCT = ".,;:!?'\"()[]`"

_ORDINAL_RE = re.compile(r"(\d+)(?:st|nd|rd|th)\Z")


@dataclass(frozen=True)
class NormalizedTerm:
    """Token form of a free-text term, produced only by normalize_term."""

    tokens: tuple[str, ...]


def normalize_term(text: str) -> NormalizedTerm:
    """Lowercase, split on whitespace, strip edge punctuation, and rewrite
    ordinal day suffixes ("14th" -> "14"). Total: any input yields a term,
    possibly with no tokens.
    """
    tokens: list[str] = []
    for raw in text.lower().split():
        tok = raw.strip(_EDGE_PUNCT)
        m = _ORDINAL_RE.fullmatch(tok)
        if m:
            tok = m.group(1)
        if tok:
            tokens.append(tok)
    return NormalizedTerm(tuple(tokens))


def _contiguous_subsequence(needle: tuple[str, ...], hay: tuple[str, ...]) -> bool:
    if len(needle) > len(hay):
        return False
    return any(hay[i : i + len(needle)] == needle for i in range(len(hay) - len(needle) + 1))


def inclusion_match(a: str, b: str) -> bool:
    """True when one term's normalized tokens appear contiguously inside the
    other's. Both-empty matches; empty-vs-nonempty never does.
    """
    ta = normalize_term(a).tokens
    tb = normalize_term(b).tokens
    if not ta and not tb:
        return True
    if not ta or not tb:
        return False
    return _contiguous_subsequence(ta, tb) or _contiguous_subsequence(tb, ta)


@dataclass(frozen=True)
class Relation:
    """One allowed predicate value, e.g. 'birthday'."""

    name: str
    description: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("relation name must be non-empty")
        if any(ch.isspace() for ch in self.name):
            raise ValueError(f"relation name may not contain whitespace: {self.name!r}")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered set of relations; order is part of the identity because prompt
    text must be deterministic."""

    relations: tuple[Relation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "relations", tuple(self.relations))
        if not self.relations:
            raise EmptyVocabulary("vocabulary must contain at least one relation")
        seen: set[str] = set()
        for rel in self.relations:
            key = rel.name.casefold()
            if key in seen:
                raise ValueError(f"duplicate relation name: {rel.name!r}")
            seen.add(key)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(rel.name for rel in self.relations)

    def get(self, name: str) -> Relation | None:
        """Case-insensitive lookup, tolerant of surrounding whitespace."""
        key = name.strip().casefold()
        for rel in self.relations:
            if rel.name.casefold() == key:
                return rel
        return None


def load_vocabulary(path: str) -> Vocabulary:
    """Read a vocabulary file: {"relations": [{"name": ..., "description": ...}]}."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(str(path), exc.lineno, f"invalid JSON: {exc.msg}") from exc
    entries = data.get("relations") if isinstance(data, dict) else None
    if not isinstance(entries, list):
        raise SchemaError(str(path), 1, "expected an object with a 'relations' list")
    relations = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "name" not in entry:
            raise SchemaError(str(path), 1, f"relations[{i}] must be an object with a 'name'")
        try:
            relations.append(Relation(str(entry["name"]), str(entry.get("description", ""))))
        except ValueError as exc:
            raise SchemaError(str(path), 1, f"relations[{i}]: {exc}") from exc
    return Vocabulary(tuple(relations))


@dataclass(frozen=True)
class Triple:
    """A (subject, predicate, object) assertion. Fields keep their original
    text; all three must be non-empty after trimming."""

    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            if not getattr(self, name).strip():
                raise ValueError(f"triple {name} must be non-empty after trimming")
