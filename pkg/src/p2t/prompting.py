"""Deterministic construction of prompt bundles and fine-tuning messages.

Bundles are plain message lists in chat form. The system wording lives in
template files (shipped defaults under p2t/data/) so it can be swapped
without code changes; what is fixed is the behavior: the system text
enumerates the vocabulary, asks for a ('subject', 'verb-predicate',
'object', 'relation') quadruple whose fourth term is one of the enumerated
names, and asks the model to flag out-of-context sentences.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Sequence

from . import assets
from .core import Triple, Vocabulary
from .errors import (
    EmptyPrompt,
    EmptyVocabulary,
    MissingExamples,
    MissingGroundTruth,
    SchemaError,
    TemplateError,
)
from .fileio import read_jsonl
from .parsing import serialize_triple

if TYPE_CHECKING:
    from .datagen import DatasetRecord

_ROLES = ("system", "user", "assistant")


class PromptMode(str, Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    FINETUNED = "finetuned"


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}, got {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class PromptBundle:
    messages: tuple[ChatMessage, ...]
    mode: PromptMode
    vocabulary_fingerprint: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("bundle must contain at least one message")
        if self.mode in (PromptMode.ZERO_SHOT, PromptMode.FEW_SHOT):
            system_count = sum(1 for m in self.messages if m.role == "system")
            if system_count != 1 or self.messages[0].role != "system":
                raise ValueError(f"{self.mode.value} bundle must start with exactly one system message")
        if self.messages[-1].role != "user":
            raise ValueError("bundle must end with a user message")

    @property
    def final_user_text(self) -> str:
        return self.messages[-1].content


@dataclass(frozen=True)
class FewShotExample:
    relation: str
    prompt_text: str
    expected_output: str


def vocabulary_fingerprint(vocab: Vocabulary) -> str:
    """Stable hash of relation names, descriptions, and their order."""
    payload = json.dumps([[r.name, r.description] for r in vocab.relations])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def render_relation_lines(vocab: Vocabulary) -> str:
    lines = []
    for rel in vocab.relations:
        lines.append(f"- {rel.name}: {rel.description}" if rel.description else f"- {rel.name}")
    return "\n".join(lines)


class TemplateKind(str, Enum):
    ZERO_SHOT_SYSTEM = "zero_shot_system"
    FEW_SHOT_SYSTEM = "few_shot_system"


# placeholder names each template kind must / may contain
_REQUIRED = {
    TemplateKind.ZERO_SHOT_SYSTEM: {"relations"},
    TemplateKind.FEW_SHOT_SYSTEM: {"relations"},
}
_ALLOWED = {
    TemplateKind.ZERO_SHOT_SYSTEM: {"relations", "user_prompt"},
    TemplateKind.FEW_SHOT_SYSTEM: {"relations", "user_prompt", "examples"},
}

_PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")


def validate_template(text: str, kind: TemplateKind, source: str = "<template>") -> str:
    found = set(_PLACEHOLDER_RE.findall(text))
    unknown = found - _ALLOWED[kind]
    if unknown:
        raise TemplateError(f"{source}: unknown placeholder(s) {sorted(unknown)} for {kind.value}")
    missing = _REQUIRED[kind] - found
    if missing:
        raise TemplateError(f"{source}: missing placeholder(s) {sorted(missing)} for {kind.value}")
    return text


def load_prompt_template(path: str, kind: TemplateKind) -> str:
    with open(path, encoding="utf-8") as fh:
        return validate_template(fh.read(), kind, source=str(path))


def default_template(kind: TemplateKind) -> str:
    return validate_template(assets.data_text(f"{kind.value}.txt"), kind, source=f"data/{kind.value}.txt")


def _substitute(template: str, values: dict[str, str]) -> str:
    out = template
    for name, value in values.items():
        out = out.replace("{" + name + "}", value)
    return out


def build_zero_shot(
    vocab: Vocabulary, user_prompt: str, system_template: str | None = None
) -> PromptBundle:
    """System message enumerating the vocabulary plus the user's sentence.

    Byte-identical output for identical inputs.
    """
    if not vocab.relations:
        raise EmptyVocabulary("cannot build a prompt over an empty vocabulary")
    if not user_prompt.strip():
        raise EmptyPrompt("user prompt must be non-empty")
    template = system_template if system_template is not None else default_template(TemplateKind.ZERO_SHOT_SYSTEM)
    system_text = _substitute(
        template, {"relations": render_relation_lines(vocab), "user_prompt": user_prompt}
    )
    return PromptBundle(
        messages=(ChatMessage("system", system_text), ChatMessage("user", user_prompt)),
        mode=PromptMode.ZERO_SHOT,
        vocabulary_fingerprint=vocabulary_fingerprint(vocab),
    )


def _render_examples_text(pairs: Sequence[tuple[str, str]]) -> str:
    blocks = [f"user: {prompt}\nassistant: {output}" for prompt, output in pairs]
    return "\n\n".join(blocks)


def build_few_shot(
    vocab: Vocabulary,
    bank: Sequence[FewShotExample],
    per_relation: int,
    user_prompt: str,
    system_template: str | None = None,
) -> PromptBundle:
    """Worked examples per relation, in vocabulary order then bank order,
    followed by the user's sentence."""
    if per_relation < 1:
        raise ValueError("per_relation must be >= 1")
    if not user_prompt.strip():
        raise EmptyPrompt("user prompt must be non-empty")
    selected: list[tuple[str, str]] = []
    for rel in vocab.relations:
        matching = [ex for ex in bank if ex.relation.casefold() == rel.name.casefold()]
        if len(matching) < per_relation:
            raise MissingExamples(rel.name, per_relation, len(matching))
        for ex in matching[:per_relation]:
            selected.append((ex.prompt_text, ex.expected_output))

    template = system_template if system_template is not None else default_template(TemplateKind.FEW_SHOT_SYSTEM)
    system_text = _substitute(
        template,
        {
            "relations": render_relation_lines(vocab),
            "examples": _render_examples_text(selected),
            "user_prompt": user_prompt,
        },
    )
    messages: list[ChatMessage] = [ChatMessage("system", system_text)]
    for prompt_text, expected in selected:
        messages.append(ChatMessage("user", prompt_text))
        messages.append(ChatMessage("assistant", expected))
    messages.append(ChatMessage("user", user_prompt))
    return PromptBundle(
        messages=tuple(messages),
        mode=PromptMode.FEW_SHOT,
        vocabulary_fingerprint=vocabulary_fingerprint(vocab),
    )


def build_finetuned(vocab: Vocabulary, user_prompt: str) -> PromptBundle:
    """A fine-tuned model has internalized the task: the bundle is the bare
    user sentence."""
    if not user_prompt.strip():
        raise EmptyPrompt("user prompt must be non-empty")
    return PromptBundle(
        messages=(ChatMessage("user", user_prompt),),
        mode=PromptMode.FINETUNED,
        vocabulary_fingerprint=vocabulary_fingerprint(vocab),
    )


def build_finetune_messages(record: "DatasetRecord") -> list[ChatMessage]:
    """(user, assistant) training pair for one dataset record; the assistant
    turn is the canonical serialized ground-truth triple. No system message."""
    if not (record.subject_gt.strip() and record.relation.strip() and record.object_gt.strip()):
        raise MissingGroundTruth(f"record {record.id!r} lacks a ground-truth triple")
    gt = Triple(record.subject_gt, record.relation, record.object_gt)
    return [
        ChatMessage("user", record.prompt),
        ChatMessage("assistant", serialize_triple(gt)),
    ]


def load_example_bank(path: str, vocab: Vocabulary | None = None) -> list[FewShotExample]:
    """Example-bank JSONL: one example per line with keys relation,
    prompt_text, expected_output. With a vocabulary, unknown relations are
    rejected."""
    examples: list[FewShotExample] = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        for key in ("relation", "prompt_text", "expected_output"):
            if not isinstance(row.get(key), str) or not row[key]:
                raise SchemaError(str(path), lineno, f"missing or empty field '{key}'")
        if vocab is not None and vocab.get(row["relation"]) is None:
            raise SchemaError(str(path), lineno, f"relation {row['relation']!r} not in vocabulary")
        examples.append(FewShotExample(row["relation"], row["prompt_text"], row["expected_output"]))
    return examples
