"""Three-stage synthetic dataset pipeline: templates -> date expansion ->
paraphrase augmentation, plus splitting and fine-tune export.

Stage 1 is the shipped template corpus (86 prompt/response templates over
the birthday and anniversary relations). Stage 2 replaces each template's
{DATE} placeholder with seeded random dates in several surface formats.
Stage 3 asks a completion backend to paraphrase each prompt, validating that
every paraphrase keeps the date tokens of the ground truth; failures retry
and finally fall back to the original prompt with the record flagged.

Every stage is deterministic given its seed (dates derive from a hash of
seed, template id, and variant index, so editing one template never
reshuffles the others).
"""

from __future__ import annotations

import calendar
import hashlib
import json
import random
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Sequence

from .backend import BackendError, CompletionBackend, GenerationParams, ReplayTape, complete_batch
from .core import Triple, normalize_term
from .errors import (
    DuplicateIdError,
    InfeasibleSplit,
    MissingSplit,
    SchemaError,
)
from .fileio import atomic_write_text, read_jsonl, write_jsonl
from .parsing import OutcomeKind, parse_response
from .prompting import ChatMessage, PromptBundle, PromptMode, build_finetune_messages

SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    relation: str
    prompt_pattern: str
    response_pattern: str
    subject_gt: str


@dataclass
class DatasetRecord:
    """One prompt/response pair with its ground-truth triple and lineage."""

    id: str
    base_id: str
    variant: int
    paraphrase: int
    prompt: str
    response: str
    relation: str
    subject_gt: str
    object_gt: str
    split: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "base_id": self.base_id,
            "variant": self.variant,
            "paraphrase": self.paraphrase,
            "prompt": self.prompt,
            "response": self.response,
            "relation": self.relation,
            "subject_gt": self.subject_gt,
            "object_gt": self.object_gt,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, row: dict[str, Any]) -> "DatasetRecord":
        return cls(
            id=row["id"],
            base_id=row["base_id"],
            variant=int(row["variant"]),
            paraphrase=int(row["paraphrase"]),
            prompt=row["prompt"],
            response=row["response"],
            relation=row["relation"],
            subject_gt=row["subject_gt"],
            object_gt=row["object_gt"],
            split=row.get("split"),
        )


class SplitMode(str, Enum):
    RECORD_RANDOM = "record_random"
    GROUP_BY_BASE = "group_by_base"


@dataclass(frozen=True)
class SplitSpec:
    train: int
    valid: int
    test: int
    seed: int = 0
    mode: SplitMode = SplitMode.RECORD_RANDOM

    def __post_init__(self) -> None:
        if min(self.train, self.valid, self.test) < 0:
            raise ValueError("split counts must be >= 0")


@dataclass(frozen=True)
class FinetuneManifest:
    """Training configuration exported alongside the dataset. Defaults are
    the reference hyperparameters; system_message records that training pairs
    carry no system turn (trainers may override)."""

    optimizer: str = "adam"
    learning_rate: float = 1e-5
    layers_to_finetune: int = 16
    minibatch_size: int = 4
    iterations: int = 1000
    dataset_fingerprint: str = ""
    system_message: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "optimizer": self.optimizer,
            "learning_rate": self.learning_rate,
            "layers_to_finetune": self.layers_to_finetune,
            "minibatch_size": self.minibatch_size,
            "iterations": self.iterations,
            "dataset_fingerprint": self.dataset_fingerprint,
            "system_message": self.system_message,
        }


# ---------------------------------------------------------------------------
# stage 1: templates

_SENTINEL_DATE = "7/7/1977"


def load_templates(path: str | Path) -> list[PromptTemplate]:
    """Template JSONL loader. Each template is validated structurally and by
    rendering its response with a sentinel date and checking that it parses
    back to the expected ground-truth triple."""
    templates: list[PromptTemplate] = []
    seen: set[str] = set()
    for lineno, row in enumerate(read_jsonl(path), start=1):
        for key in ("id", "relation", "prompt_pattern", "response_pattern", "subject_gt"):
            if not isinstance(row.get(key), str) or not row[key]:
                raise SchemaError(str(path), lineno, f"missing or empty field '{key}'")
        if row["prompt_pattern"].count("{DATE}") != 1:
            raise SchemaError(str(path), lineno, "prompt_pattern must contain {DATE} exactly once")
        if "{DATE}" not in row["response_pattern"]:
            raise SchemaError(str(path), lineno, "response_pattern must contain {DATE}")
        if row["id"] in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate template id {row['id']!r}")
        seen.add(row["id"])
        tpl = PromptTemplate(
            id=row["id"],
            relation=row["relation"],
            prompt_pattern=row["prompt_pattern"],
            response_pattern=row["response_pattern"],
            subject_gt=row["subject_gt"],
        )
        rendered = _render_response(tpl, _SENTINEL_DATE)
        parsed = parse_response(rendered)
        ok = (
            parsed.kind is OutcomeKind.EXTRACTED
            and parsed.quad is not None
            and parsed.quad.relation is None
            and (parsed.quad.subject, parsed.quad.predicate, parsed.quad.object)
            == (tpl.subject_gt, tpl.relation, _SENTINEL_DATE)
        )
        if not ok:
            raise SchemaError(
                str(path), lineno, "response_pattern does not render to the ground-truth triple"
            )
        templates.append(tpl)
    return templates


def _render_response(tpl: PromptTemplate, date_text: str) -> str:
    return tpl.response_pattern.replace("{SUBJ_GT}", tpl.subject_gt).replace("{DATE}", date_text)


# ---------------------------------------------------------------------------
# stage 2: date expansion

_MONTHS = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)

DATE_FORMATS = ("month_day_year", "month_day_ordinal", "day_month_year", "slashed", "year_only")

DEFAULT_YEAR_RANGES: dict[str, tuple[int, int]] = {
    "birthday": (1940, 2010),
    "anniversary": (1960, 2023),
}
_FALLBACK_YEAR_RANGE = (1940, 2023)


def _ordinal(day: int) -> str:
    if 11 <= day % 100 <= 13:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(day % 10, "th")
    return f"{day}{suffix}"


def _render_date(year: int, month: int, day: int, fmt: str) -> str:
    name = _MONTHS[month - 1]
    if fmt == "month_day_year":
        return f"{name} {day}, {year}"
    if fmt == "month_day_ordinal":
        return f"{name} {_ordinal(day)}"
    if fmt == "day_month_year":
        return f"{day} {name} {year}"
    if fmt == "slashed":
        return f"{day}/{month}/{year}"
    if fmt == "year_only":
        return str(year)
    raise ValueError(f"unknown date format {fmt!r}")


def _derived_seed(*parts: object) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def expand_templates(
    templates: Sequence[PromptTemplate],
    variants_per_template: int,
    seed: int,
    year_ranges: dict[str, tuple[int, int]] | None = None,
) -> list[DatasetRecord]:
    """Replace {DATE} with seeded random dates; each template yields
    variants_per_template records and object_gt is the date as rendered."""
    if variants_per_template < 1:
        raise ValueError("variants_per_template must be >= 1")
    ranges = DEFAULT_YEAR_RANGES if year_ranges is None else year_ranges
    records: list[DatasetRecord] = []
    for tpl in templates:
        lo, hi = ranges.get(tpl.relation, _FALLBACK_YEAR_RANGE)
        for variant in range(variants_per_template):
            rng = random.Random(_derived_seed(seed, tpl.id, variant))
            year = rng.randint(lo, hi)
            month = rng.randint(1, 12)
            day = rng.randint(1, calendar.monthrange(year, month)[1])
            fmt = rng.choice(DATE_FORMATS)
            date_text = _render_date(year, month, day, fmt)
            records.append(
                DatasetRecord(
                    id=f"{tpl.id}.v{variant:02d}",
                    base_id=tpl.id,
                    variant=variant,
                    paraphrase=0,
                    prompt=tpl.prompt_pattern.replace("{DATE}", date_text),
                    response=_render_response(tpl, date_text),
                    relation=tpl.relation,
                    subject_gt=tpl.subject_gt,
                    object_gt=date_text,
                )
            )
    return records


# ---------------------------------------------------------------------------
# stage 3: paraphrase augmentation

PARAPHRASE_SYSTEM_TEXT = (
    "You rewrite sentences. Keep the meaning identical and keep every name, "
    "number, and date exactly as written. Reply with the rewritten sentence only."
)


def paraphrase_request_text(sentence: str, variation: int, total: int, attempt: int) -> str:
    """User-message text of a paraphrase request. Variation and attempt are
    spelled out so retries and sibling variations key distinctly in a replay
    tape (and still differ at temperature 0 against a live model)."""
    return (
        f"Rewrite variation {variation} of {total} (attempt {attempt}). "
        f"Sentence: {sentence}"
    )


def paraphrase_bundle(sentence: str, variation: int, total: int, attempt: int) -> PromptBundle:
    return PromptBundle(
        messages=(
            ChatMessage("system", PARAPHRASE_SYSTEM_TEXT),
            ChatMessage("user", paraphrase_request_text(sentence, variation, total, attempt)),
        ),
        mode=PromptMode.ZERO_SHOT,
        vocabulary_fingerprint="",
    )


def paraphrase_keeps_date(candidate: str, object_gt: str) -> bool:
    """A usable paraphrase keeps every normalized date token of the ground
    truth somewhere in the sentence."""
    if not candidate.strip():
        return False
    have = set(normalize_term(candidate).tokens)
    return all(tok in have for tok in normalize_term(object_gt).tokens)


def paraphrase_records(
    records: Sequence[DatasetRecord],
    paraphrases_per: int,
    backend: CompletionBackend,
    params: GenerationParams,
    max_in_flight: int = 4,
    max_attempts: int = 3,
) -> tuple[list[DatasetRecord], list[dict[str, Any]]]:
    """Emit each record followed by paraphrases_per paraphrased copies whose
    response and ground truth are unchanged.

    Requests go out in waves through complete_batch; a variation that fails
    validation (or errors) is retried up to max_attempts times in total, then
    the original prompt is substituted and the record id gains a '.fallback'
    suffix. Returns (records, rejects-report rows); the operation always
    completes.
    """
    if paraphrases_per < 0:
        raise ValueError("paraphrases_per must be >= 0")
    if paraphrases_per == 0:
        return list(records), []

    pending: list[tuple[int, int]] = [
        (i, var) for i in range(len(records)) for var in range(1, paraphrases_per + 1)
    ]
    accepted: dict[tuple[int, int], str] = {}
    failures: dict[tuple[int, int], str] = {}

    for attempt in range(1, max_attempts + 1):
        if not pending:
            break
        bundles = [
            paraphrase_bundle(records[i].prompt, var, paraphrases_per, attempt)
            for i, var in pending
        ]
        results = complete_batch(backend, bundles, params, max_in_flight=max_in_flight)
        still_pending: list[tuple[int, int]] = []
        for key, result in zip(pending, results):
            i, _ = key
            if isinstance(result, BackendError):
                failures[key] = f"backend error: {result}"
                still_pending.append(key)
            elif paraphrase_keeps_date(result.text, records[i].object_gt):
                accepted[key] = result.text.strip()
            else:
                failures[key] = "paraphrase dropped ground-truth date tokens"
                still_pending.append(key)
        pending = still_pending

    rejects: list[dict[str, Any]] = []
    out: list[DatasetRecord] = []
    for i, rec in enumerate(records):
        out.append(replace(rec))
        for var in range(1, paraphrases_per + 1):
            key = (i, var)
            if key in accepted:
                out.append(
                    replace(
                        rec,
                        id=f"{rec.id}.p{var}",
                        paraphrase=var,
                        prompt=accepted[key],
                        split=None,
                    )
                )
            else:
                new_id = f"{rec.id}.p{var}.fallback"
                out.append(replace(rec, id=new_id, paraphrase=var, split=None))
                rejects.append(
                    {
                        "id": new_id,
                        "record_id": rec.id,
                        "variation": var,
                        "attempts": max_attempts,
                        "reason": failures.get(key, "unknown"),
                    }
                )
    return out, rejects


def build_mock_paraphrase_tape(records: Sequence[DatasetRecord], paraphrases_per: int) -> ReplayTape:
    """Synthesize a replay tape that answers every first-attempt paraphrase
    request with a rule-based rewording (date-preserving by construction).
    Useful for hermetic pipeline runs and tests."""
    frames = (
        "Just so you know, {s}",
        "Here is something to remember: {s}",
        "For the record, {s}",
        "Do not forget: {s}",
        "A quick note for you: {s}",
    )
    tape = ReplayTape()
    for rec in records:
        for var in range(1, paraphrases_per + 1):
            request = paraphrase_request_text(rec.prompt, var, paraphrases_per, attempt=1)
            response = frames[(var - 1) % len(frames)].format(s=rec.prompt)
            tape.add(PromptMode.ZERO_SHOT.value, request, response)
    return tape


# ---------------------------------------------------------------------------
# splitting and export

def split_records(records: Sequence[DatasetRecord], spec: SplitSpec) -> list[DatasetRecord]:
    """Assign split labels, leaving surplus records unassigned.

    record_random samples uniformly with the seed. group_by_base keeps whole
    base_id groups inside one split (no variant/paraphrase leakage) and trims
    within the final group of each split to hit the exact counts.
    """
    total_requested = spec.train + spec.valid + spec.test
    if total_requested > len(records):
        raise InfeasibleSplit(
            f"requested {total_requested} records across splits, only {len(records)} available"
        )
    out = [replace(rec, split=None) for rec in records]
    rng = random.Random(spec.seed)
    targets = tuple(zip(SPLITS, (spec.train, spec.valid, spec.test)))

    if spec.mode is SplitMode.RECORD_RANDOM:
        order = list(range(len(out)))
        rng.shuffle(order)
        cursor = 0
        for name, count in targets:
            for idx in order[cursor : cursor + count]:
                out[idx].split = name
            cursor += count
        return out

    # group_by_base
    group_order: list[str] = []
    groups: dict[str, list[int]] = {}
    for idx, rec in enumerate(out):
        if rec.base_id not in groups:
            groups[rec.base_id] = []
            group_order.append(rec.base_id)
        groups[rec.base_id].append(idx)
    rng.shuffle(group_order)
    remaining = iter(group_order)
    for name, count in targets:
        assigned = 0
        while assigned < count:
            base = next(remaining, None)
            if base is None:
                raise InfeasibleSplit(
                    f"not enough whole base groups to fill split '{name}' ({assigned}/{count})"
                )
            for idx in groups[base][: count - assigned]:
                out[idx].split = name
            assigned += min(len(groups[base]), count - assigned)
    return out


def dataset_fingerprint(records: Iterable[DatasetRecord]) -> str:
    h = hashlib.sha256()
    for rec in records:
        h.update(f"{rec.id}\t{rec.prompt}\t{rec.response}\n".encode("utf-8"))
    return h.hexdigest()


def export_finetune(
    records: Sequence[DatasetRecord], out_dir: str | Path
) -> dict[str, Path]:
    """Write train/valid/test.jsonl in chat format plus manifest.json.

    Each line is {"messages": [user, assistant]} built from the record's
    prompt and ground-truth triple; empty splits still produce their file.
    """
    by_split: dict[str, list[DatasetRecord]] = {name: [] for name in SPLITS}
    for rec in records:
        if rec.split in by_split:
            by_split[rec.split].append(rec)
    if not any(by_split.values()):
        raise MissingSplit("no records carry a split assignment")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    exported: list[DatasetRecord] = []
    for name in SPLITS:
        rows = []
        for rec in by_split[name]:
            messages = build_finetune_messages(rec)
            rows.append({"messages": [{"role": m.role, "content": m.content} for m in messages]})
            exported.append(rec)
        path = out_dir / f"{name}.jsonl"
        write_jsonl(path, rows)
        paths[name] = path

    manifest = FinetuneManifest(dataset_fingerprint=dataset_fingerprint(exported))
    manifest_path = out_dir / "manifest.json"
    atomic_write_text(manifest_path, json.dumps(manifest.to_dict(), indent=2) + "\n")
    paths["manifest"] = manifest_path
    return paths


def read_records(path: str | Path) -> list[DatasetRecord]:
    rows = read_jsonl(path)
    records = []
    for lineno, row in enumerate(rows, start=1):
        try:
            records.append(DatasetRecord.from_dict(row))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(str(path), lineno, f"bad dataset record: {exc}") from exc
    return records


def write_records(path: str | Path, records: Sequence[DatasetRecord]) -> int:
    return write_jsonl(path, (rec.to_dict() for rec in records))


def ground_truth_triple(rec: DatasetRecord) -> Triple:
    return Triple(rec.subject_gt, rec.relation, rec.object_gt)


def verify_ground_truth(rec: DatasetRecord) -> bool:
    """True when the record's response text parses back to its ground truth."""
    parsed = parse_response(rec.response)
    return (
        parsed.kind is OutcomeKind.EXTRACTED
        and parsed.quad is not None
        and parsed.quad.relation is None
        and (parsed.quad.subject, parsed.quad.predicate, parsed.quad.object)
        == (rec.subject_gt, rec.relation, rec.object_gt)
    )
