import hashlib
import json
from collections import Counter

import pytest

from p2t import assets
from p2t.backend import GenerationParams, MockBackend, ReplayTape
from p2t.datagen import (
    DatasetRecord,
    FinetuneManifest,
    SplitMode,
    SplitSpec,
    build_mock_paraphrase_tape,
    expand_templates,
    export_finetune,
    load_templates,
    paraphrase_keeps_date,
    paraphrase_records,
    paraphrase_request_text,
    read_records,
    split_records,
    verify_ground_truth,
    write_records,
)
from p2t.errors import DuplicateIdError, InfeasibleSplit, MissingSplit, SchemaError
from p2t.parsing import parse_response

PARAMS = GenerationParams(model="replay")


@pytest.fixture(scope="module")
def templates():
    return load_templates(assets.default_templates_path())


@pytest.fixture(scope="module")
def expanded(templates):
    return expand_templates(templates, 10, seed=7)


def test_shipped_template_file_has_86_templates(templates):
    assert len(templates) == 86
    relations = Counter(tpl.relation for tpl in templates)
    assert set(relations) == {"birthday", "anniversary"}


def test_empty_template_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert load_templates(path) == []


def test_template_missing_date_placeholder(tmp_path):
    path = tmp_path / "bad.jsonl"
    good = {"id": "t1", "relation": "birthday", "prompt_pattern": "born on {DATE}",
            "response_pattern": "('{SUBJ_GT}', 'birthday', '{DATE}')", "subject_gt": "I"}
    bad = dict(good, id="t2", prompt_pattern="born long ago")
    path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError) as excinfo:
        load_templates(path)
    assert excinfo.value.line == 2


def test_template_duplicate_id(tmp_path):
    path = tmp_path / "dup.jsonl"
    row = {"id": "t1", "relation": "birthday", "prompt_pattern": "born on {DATE}",
           "response_pattern": "('{SUBJ_GT}', 'birthday', '{DATE}')", "subject_gt": "I"}
    path.write_text(json.dumps(row) + "\n" + json.dumps(row) + "\n", encoding="utf-8")
    with pytest.raises(DuplicateIdError):
        load_templates(path)


def test_template_response_must_render_ground_truth(tmp_path):
    row = {"id": "t1", "relation": "birthday", "prompt_pattern": "born on {DATE}",
           "response_pattern": "('somebody else', 'birthday', '{DATE}')", "subject_gt": "I"}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(row) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_templates(path)


def test_expand_counts(templates, expanded):
    assert len(expanded) == len(templates) * 10 == 860


def test_expand_identity_when_one_variant(templates):
    records = expand_templates(templates, 1, seed=7)
    assert len(records) == len(templates)


def test_expand_deterministic_byte_identical(templates, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_records(a, expand_templates(templates, 10, seed=7))
    write_records(b, expand_templates(templates, 10, seed=7))
    assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()
    write_records(b, expand_templates(templates, 10, seed=8))
    assert a.read_bytes() != b.read_bytes()


def test_expand_ground_truth_preserved(expanded):
    for rec in expanded:
        assert verify_ground_truth(rec)
        assert rec.object_gt in rec.prompt


def test_expand_uses_varied_date_formats(expanded):
    # every shipped surface format should appear somewhere in 860 draws
    has_slash = any("/" in rec.object_gt for rec in expanded)
    has_ordinal = any(rec.object_gt.endswith(("st", "nd", "rd", "th")) for rec in expanded)
    has_year_only = any(rec.object_gt.isdigit() for rec in expanded)
    has_comma = any("," in rec.object_gt for rec in expanded)
    assert has_slash and has_ordinal and has_year_only and has_comma


def test_record_roundtrip_via_file(expanded, tmp_path):
    path = tmp_path / "r.jsonl"
    write_records(path, expanded[:5])
    assert read_records(path) == expanded[:5]


# ---------------------------------------------------------------------------
# paraphrasing


def test_paraphrase_zero_is_noop(expanded):
    out, rejects = paraphrase_records(expanded[:4], 0, MockBackend(ReplayTape()), PARAMS)
    assert out == expanded[:4]
    assert rejects == []


def test_paraphrase_counts_and_lineage(expanded):
    subset = expanded[:60]
    tape = build_mock_paraphrase_tape(subset, 5)
    out, rejects = paraphrase_records(subset, 5, MockBackend(tape), PARAMS)
    assert len(out) == 60 * 6
    assert sum(1 for rec in out if rec.paraphrase > 0) == 300
    assert rejects == []
    # originals first, then variations 1..5, in input order
    assert [rec.paraphrase for rec in out[:6]] == [0, 1, 2, 3, 4, 5]
    assert out[0].id == subset[0].id
    assert out[1].id == f"{subset[0].id}.p1"
    for rec in out:
        assert verify_ground_truth(rec)


def test_paraphrase_keeps_date_validation():
    assert paraphrase_keeps_date("I was born on November 14th, 1979.", "November 14, 1979")
    assert not paraphrase_keeps_date("I was born in November.", "November 14, 1979")
    assert not paraphrase_keeps_date("", "1979")


def test_paraphrase_fallback_after_three_attempts(expanded):
    rec = expanded[0]
    tape = ReplayTape()
    # every attempt returns a paraphrase that drops the date
    for attempt in (1, 2, 3):
        tape.add("zero_shot", paraphrase_request_text(rec.prompt, 1, 1, attempt),
                 "I was born a long time ago.")
    out, rejects = paraphrase_records([rec], 1, MockBackend(tape), PARAMS)
    assert len(out) == 2
    assert out[1].id == f"{rec.id}.p1.fallback"
    assert out[1].prompt == rec.prompt  # original substituted
    assert len(rejects) == 1
    assert rejects[0]["attempts"] == 3
    assert "date" in rejects[0]["reason"]
    assert len(tape.lookups) == 3


def test_paraphrase_recovers_on_retry(expanded):
    rec = expanded[0]
    tape = ReplayTape()
    tape.add("zero_shot", paraphrase_request_text(rec.prompt, 1, 1, 1), "nope")
    tape.add("zero_shot", paraphrase_request_text(rec.prompt, 1, 1, 2),
             f"Reminder: {rec.prompt}")
    out, rejects = paraphrase_records([rec], 1, MockBackend(tape), PARAMS)
    assert out[1].prompt == f"Reminder: {rec.prompt}"
    assert out[1].id == f"{rec.id}.p1"
    assert rejects == []


def test_paraphrase_backend_errors_reported(expanded):
    rec = expanded[0]
    out, rejects = paraphrase_records([rec], 1, MockBackend(ReplayTape()), PARAMS)
    assert out[1].id.endswith(".fallback")
    assert rejects[0]["reason"].startswith("backend error")


# ---------------------------------------------------------------------------
# splitting


@pytest.fixture(scope="module")
def lineage(expanded):
    tape = build_mock_paraphrase_tape(expanded, 5)
    out, _ = paraphrase_records(expanded, 5, MockBackend(tape), PARAMS)
    return [rec for rec in out if rec.paraphrase > 0]


def test_split_record_random_counts(lineage):
    assert len(lineage) == 4300
    out = split_records(lineage, SplitSpec(1000, 200, 200, seed=11))
    counts = Counter(rec.split for rec in out)
    assert counts["train"] == 1000 and counts["valid"] == 200 and counts["test"] == 200
    assert counts[None] == 2900
    ids = {name: {rec.id for rec in out if rec.split == name} for name in ("train", "valid", "test")}
    assert not (ids["train"] & ids["valid"]) and not (ids["train"] & ids["test"]) and not (ids["valid"] & ids["test"])


def test_split_zero_spec(lineage):
    out = split_records(lineage, SplitSpec(0, 0, 0, seed=1))
    assert all(rec.split is None for rec in out)


def test_split_deterministic(lineage):
    a = split_records(lineage, SplitSpec(1000, 200, 200, seed=11))
    b = split_records(lineage, SplitSpec(1000, 200, 200, seed=11))
    assert [rec.split for rec in a] == [rec.split for rec in b]
    c = split_records(lineage, SplitSpec(1000, 200, 200, seed=12))
    assert [rec.split for rec in a] != [rec.split for rec in c]


def test_split_group_by_base_no_leakage(lineage):
    out = split_records(lineage, SplitSpec(1000, 200, 200, seed=5, mode=SplitMode.GROUP_BY_BASE))
    counts = Counter(rec.split for rec in out)
    assert counts["train"] == 1000 and counts["valid"] == 200 and counts["test"] == 200
    # brute-force leakage scan: no base_id may appear in two splits
    seen: dict[str, set[str]] = {}
    for rec in out:
        if rec.split is not None:
            seen.setdefault(rec.base_id, set()).add(rec.split)
    assert all(len(splits) == 1 for splits in seen.values())


def test_split_infeasible(lineage):
    with pytest.raises(InfeasibleSplit):
        split_records(lineage[:100], SplitSpec(90, 20, 0, seed=1))


def test_split_input_not_mutated(lineage):
    before = [rec.split for rec in lineage]
    split_records(lineage, SplitSpec(10, 5, 5, seed=2))
    assert [rec.split for rec in lineage] == before


# ---------------------------------------------------------------------------
# export


def test_export_paper_shaped_splits(lineage, tmp_path):
    out = split_records(lineage, SplitSpec(1000, 200, 200, seed=11))
    paths = export_finetune(out, tmp_path / "ft")
    lines = {name: (tmp_path / "ft" / f"{name}.jsonl").read_text(encoding="utf-8").splitlines()
             for name in ("train", "valid", "test")}
    assert len(lines["train"]) == 1000
    assert len(lines["valid"]) == 200
    assert len(lines["test"]) == 200

    by_id = {rec.id: rec for rec in out}
    gold_by_prompt = {}
    for rec in out:
        if rec.split is not None:
            gold_by_prompt[rec.prompt] = rec
    for name in ("train", "valid", "test"):
        for line in lines[name]:
            msg = json.loads(line)["messages"]
            assert [m["role"] for m in msg] == ["user", "assistant"]
            rec = gold_by_prompt[msg[0]["content"]]
            parsed = parse_response(msg[1]["content"])
            assert (parsed.quad.subject, parsed.quad.predicate, parsed.quad.object) == (
                rec.subject_gt, rec.relation, rec.object_gt,
            )

    manifest = json.loads((tmp_path / "ft" / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["optimizer"] == "adam"
    assert manifest["learning_rate"] == 1e-5
    assert manifest["layers_to_finetune"] == 16
    assert manifest["minibatch_size"] == 4
    assert manifest["iterations"] == 1000
    assert manifest["dataset_fingerprint"]
    assert by_id  # keeps the fixture honest


def test_export_empty_test_split_still_creates_file(lineage, tmp_path):
    out = split_records(lineage[:50], SplitSpec(10, 5, 0, seed=3))
    paths = export_finetune(out, tmp_path / "ft2")
    assert paths["test"].exists()
    assert paths["test"].read_text(encoding="utf-8") == ""


def test_export_requires_some_split(lineage, tmp_path):
    with pytest.raises(MissingSplit):
        export_finetune(lineage[:10], tmp_path / "ft3")


def test_manifest_defaults_match_reference_values():
    manifest = FinetuneManifest()
    assert (manifest.optimizer, manifest.learning_rate, manifest.layers_to_finetune,
            manifest.minibatch_size, manifest.iterations) == ("adam", 1e-5, 16, 4, 1000)
