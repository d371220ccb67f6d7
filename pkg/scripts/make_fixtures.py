#!/usr/bin/env python3
"""Regenerate the committed 200-record mock-run fixture.

Expands the shipped templates, takes a 200-record test split, and scripts a
replay tape whose responses cover every verdict class (correct, correct via
inclusion, term-mangled, wrong in-set relation, out-of-set predicate,
out-of-context cue, garbage), chosen deterministically from each record id.

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import hashlib
import sys
from pathlib import Path

from p2t import assets
from p2t.backend import ReplayTape
from p2t.datagen import SplitSpec, expand_templates, load_templates, split_records, write_records

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SEED = 20240214


def _bucket(record_id: str) -> int:
    return int.from_bytes(hashlib.sha256(record_id.encode()).digest()[:4], "big") % 100


def response_for(rec) -> str:
    bucket = _bucket(rec.id)
    other = "anniversary" if rec.relation == "birthday" else "birthday"
    if bucket < 50:  # exact terms, correct relation
        return f"('{rec.subject_gt}', 'noted', '{rec.object_gt}', '{rec.relation}')"
    if bucket < 60:  # subject shortened; still an inclusion match
        short = rec.subject_gt.split()[-1]
        return f"('{short}', 'noted', '{rec.object_gt}', '{rec.relation}')"
    if bucket < 70:  # object mangled; relation right, terms wrong
        return f"('{rec.subject_gt}', 'noted', 'the wrong day entirely', '{rec.relation}')"
    if bucket < 78:  # wrong in-set relation
        return f"('{rec.subject_gt}', 'noted', '{rec.object_gt}', '{other}')"
    if bucket < 86:  # out-of-set predicate, no relation term
        return f"('{rec.subject_gt}', 'mentioned', '{rec.object_gt}')"
    if bucket < 93:  # out-of-context refusal
        return "This sentence is out of context for the known relations."
    return "I am not sure I can help with that one."


def main() -> int:
    templates = load_templates(assets.default_templates_path())
    expanded = expand_templates(templates, 10, seed=SEED)
    split = split_records(expanded, SplitSpec(0, 0, 200, seed=SEED))
    test = [rec for rec in split if rec.split == "test"]
    assert len(test) == 200

    prompts = [rec.prompt for rec in test]
    assert len(set(prompts)) == 200, "tape keys must be unique"

    tape = ReplayTape()
    for rec in test:
        tape.add("zero_shot", rec.prompt, response_for(rec))

    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_records(FIXTURES / "mock200_gold.jsonl", test)
    tape.save(FIXTURES / "mock200_tape.jsonl")
    print(f"wrote {FIXTURES / 'mock200_gold.jsonl'} and mock200_tape.jsonl (200 records)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
