"""Command-line front door: `p2t datagen {expand,paraphrase,split,export}`,
`p2t extract`, and `p2t evaluate`.

Shared flags (usable on every subcommand, or via a key=value --config file,
flags winning): --config, --seed, --endpoint, --model, --tape,
--max-in-flight. Exit codes: 0 success, 1 usage/config, 2 data error,
3 backend error. Machine-readable outputs are written (atomically) before
any human-readable summary is printed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from . import assets
from .backend import GenerationParams, HttpBackend, MockBackend, ReplayTape, complete_batch
from .core import Vocabulary, load_vocabulary
from .datagen import (
    SplitMode,
    SplitSpec,
    expand_templates,
    export_finetune,
    load_templates,
    paraphrase_records,
    read_records,
    split_records,
    write_records,
)
from .errors import BackendError, DataError, P2TError, UsageError
from .evaluation import F1Mode, evaluate_run
from .fileio import atomic_write_text, read_jsonl, write_jsonl
from .parsing import extract_outcome, load_cue_phrases, outcome_from_dict, outcome_to_dict
from .prompting import (
    TemplateKind,
    build_few_shot,
    build_finetuned,
    build_zero_shot,
    load_example_bank,
    load_prompt_template,
)
from .report import render_table, write_metrics_csv, write_metrics_figure

_CONFIG_KEYS = {
    "endpoint", "model", "tape", "seed", "max_in_flight", "f1_mode",
    "vocab", "bank", "mode", "label", "cues", "system_template",
    "per_relation", "timeout", "max_tokens", "temperature",
}


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _load_config_file(path: str) -> dict[str, str]:
    config: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        config[key] = value.strip()
    return config


class Settings:
    """Flag > config-file > default resolution."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.config = _load_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, key: str, default: Any = None, cast: Any = str) -> Any:
        value = getattr(self.args, key, None)
        if value is None and key in self.config:
            value = self.config[key]
        if value is None:
            return default
        try:
            return cast(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key!r}: {value!r}") from exc


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--endpoint", help="base URL of an OpenAI-compatible endpoint")
    parser.add_argument("--model", help="model identifier sent to the endpoint")
    parser.add_argument("--tape", help="replay-tape JSONL; activates the mock backend")
    parser.add_argument("--max-in-flight", dest="max_in_flight", type=int,
                        help="max concurrent requests (default 4)")


def _make_backend(settings: Settings):
    tape_path = settings.get("tape")
    if tape_path:
        return MockBackend(ReplayTape.load(tape_path))
    endpoint = settings.get("endpoint")
    if endpoint:
        return HttpBackend(endpoint)
    raise UsageError("either --tape (mock) or --endpoint (live) is required")


def _make_params(settings: Settings) -> GenerationParams:
    return GenerationParams(
        model=settings.get("model", default="replay"),
        temperature=settings.get("temperature", default=0.0, cast=float),
        max_tokens=settings.get("max_tokens", default=256, cast=int),
        timeout=settings.get("timeout", default=30.0, cast=float),
        seed=settings.get("seed", cast=int),
    )


def _load_vocab(settings: Settings) -> Vocabulary:
    path = settings.get("vocab", default=str(assets.default_vocabulary_path()))
    return load_vocabulary(path)


# ---------------------------------------------------------------------------
# datagen subcommands

def cmd_datagen_expand(args: argparse.Namespace) -> int:
    settings = Settings(args)
    templates = load_templates(args.templates or str(assets.default_templates_path()))
    records = expand_templates(templates, args.variants, settings.get("seed", default=0, cast=int))
    count = write_records(args.out, records)
    print(f"expanded {len(templates)} -> {count}")
    return 0


def cmd_datagen_paraphrase(args: argparse.Namespace) -> int:
    settings = Settings(args)
    records = read_records(args.infile)
    backend = _make_backend(settings)
    params = _make_params(settings)
    out, rejects = paraphrase_records(
        records, args.per, backend, params,
        max_in_flight=settings.get("max_in_flight", default=4, cast=int),
    )
    write_records(args.out, out)
    rejects_path = args.rejects or (str(args.out) + ".rejects.jsonl")
    if rejects or args.rejects:
        write_jsonl(rejects_path, rejects)
    lineage = sum(1 for rec in out if rec.paraphrase > 0)
    print(
        f"paraphrased {len(records)} -> {lineage} paraphrase records "
        f"({len(out)} total incl. originals, {len(rejects)} fallbacks)"
    )
    return 0


def cmd_datagen_split(args: argparse.Namespace) -> int:
    settings = Settings(args)
    records = read_records(args.infile)
    if args.only_paraphrases:
        records = [rec for rec in records if rec.paraphrase > 0]
    try:
        train, valid, test = (int(part) for part in args.sizes.split(","))
    except ValueError as exc:
        raise UsageError(f"--sizes expects train,valid,test integers: {args.sizes!r}") from exc
    spec = SplitSpec(train, valid, test, settings.get("seed", default=0, cast=int),
                     SplitMode(args.mode))
    out = split_records(records, spec)
    write_records(args.out, out)
    assigned = {name: sum(1 for rec in out if rec.split == name) for name in ("train", "valid", "test")}
    unassigned = sum(1 for rec in out if rec.split is None)
    print(
        f"assigned train={assigned['train']} valid={assigned['valid']} "
        f"test={assigned['test']} unassigned={unassigned}"
    )
    return 0


def cmd_datagen_export(args: argparse.Namespace) -> int:
    records = read_records(args.infile)
    paths = export_finetune(records, args.out_dir)
    for name in ("train", "valid", "test"):
        count = sum(1 for line in Path(paths[name]).read_text(encoding="utf-8").splitlines() if line)
        print(f"wrote {paths[name]} ({count} lines)")
    print(f"wrote {paths['manifest']}")
    return 0


# ---------------------------------------------------------------------------
# extract / evaluate

@dataclass(frozen=True)
class RunConfig:
    """Resolved extraction-run configuration; mode-required paths are
    validated at construction time."""

    mode: str
    endpoint: str | None
    model: str
    tape: str | None
    vocab_path: str
    bank_path: str | None
    system_template_path: str | None
    cues_path: str | None
    seed: int
    f1_mode: str
    max_in_flight: int
    per_relation: int

    def __post_init__(self) -> None:
        if self.mode not in ("zero_shot", "few_shot", "finetuned"):
            raise UsageError(
                f"--mode must be zero_shot, few_shot, or finetuned, got {self.mode!r}"
            )
        if self.mode == "few_shot" and not self.bank_path:
            raise UsageError("few_shot mode requires --bank")
        if not self.tape and not self.endpoint:
            raise UsageError("either --tape (mock) or --endpoint (live) is required")


def resolve_run_config(settings: Settings) -> RunConfig:
    return RunConfig(
        mode=settings.get("mode", default=""),
        endpoint=settings.get("endpoint"),
        model=settings.get("model", default="replay"),
        tape=settings.get("tape"),
        vocab_path=settings.get("vocab", default=str(assets.default_vocabulary_path())),
        bank_path=settings.get("bank"),
        system_template_path=settings.get("system_template"),
        cues_path=settings.get("cues"),
        seed=settings.get("seed", default=0, cast=int),
        f1_mode=settings.get("f1_mode", default=F1Mode.HARMONIC_OF_MACRO.value),
        max_in_flight=settings.get("max_in_flight", default=4, cast=int),
        per_relation=settings.get("per_relation", default=2, cast=int),
    )


def _build_bundle(mode: str, vocab: Vocabulary, prompt: str, *,
                  system_template: str | None, bank, per_relation: int):
    if mode == "zero_shot":
        return build_zero_shot(vocab, prompt, system_template)
    if mode == "few_shot":
        return build_few_shot(vocab, bank, per_relation, prompt, system_template)
    return build_finetuned(vocab, prompt)


def cmd_extract(args: argparse.Namespace) -> int:
    settings = Settings(args)
    config = resolve_run_config(settings)
    vocab = load_vocabulary(config.vocab_path)
    records = read_records(args.dataset)

    bank = None
    if config.mode == "few_shot":
        bank = load_example_bank(config.bank_path, vocab)
    template = None
    if config.system_template_path:
        kind = (
            TemplateKind.FEW_SHOT_SYSTEM
            if config.mode == "few_shot"
            else TemplateKind.ZERO_SHOT_SYSTEM
        )
        template = load_prompt_template(config.system_template_path, kind)
    cues = load_cue_phrases(config.cues_path) if config.cues_path else None

    out_path = Path(args.out)
    done_rows: dict[str, dict] = {}
    if out_path.exists():
        for row in read_jsonl(out_path):
            done_rows[row["id"]] = row
    pending = [rec for rec in records if rec.id not in done_rows]

    backend = _make_backend(settings)
    params = _make_params(settings)
    bundles = [
        _build_bundle(config.mode, vocab, rec.prompt, system_template=template,
                      bank=bank, per_relation=config.per_relation)
        for rec in pending
    ]
    results = complete_batch(backend, bundles, params, max_in_flight=config.max_in_flight)

    new_rows: dict[str, dict] = {}
    for rec, result in zip(pending, results):
        if isinstance(result, BackendError):
            outcome = extract_outcome("", vocab, cues)
            new_rows[rec.id] = outcome_to_dict(rec.id, outcome, error=str(result))
        else:
            outcome = extract_outcome(result.text, vocab, cues)
            new_rows[rec.id] = outcome_to_dict(rec.id, outcome)

    rows = [done_rows.get(rec.id) or new_rows[rec.id] for rec in records]
    write_jsonl(out_path, rows)
    print(f"extracted {len(pending)} records ({len(done_rows)} already present) -> {out_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    settings = Settings(args)
    vocab = _load_vocab(settings)
    gold = read_records(args.gold)
    outcome_rows = read_jsonl(args.outcomes)
    outcomes = {}
    for row in outcome_rows:
        if row["id"] in outcomes:
            raise DataError(f"duplicate outcome id {row['id']!r}")
        outcomes[row["id"]] = outcome_from_dict(row)

    f1_mode = F1Mode(settings.get("f1_mode", default=F1Mode.HARMONIC_OF_MACRO.value))
    run = evaluate_run(outcomes, gold, vocab, f1_mode)

    label = settings.get("label", default="run")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = {"label": label, "relation": run.relation.to_dict(), "triple": run.triple.to_dict()}
    atomic_write_text(out_dir / "report.json", json.dumps(report, indent=2) + "\n")
    write_jsonl(out_dir / "judgements.jsonl", (j.to_dict() for j in run.judgements))
    write_metrics_csv(out_dir / "metrics.csv", label, run.relation, run.triple)
    write_metrics_figure(out_dir / "metrics.png", label, run.relation, run.triple)
    print(render_table([(label, run.relation, run.triple)]))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="p2t", description="Prompt-to-triple knowledge capture toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    datagen = sub.add_parser("datagen", help="synthetic dataset pipeline")
    dg = datagen.add_subparsers(dest="subcommand", required=True)

    p = dg.add_parser("expand", help="expand templates with seeded random dates")
    p.add_argument("--templates", help="template JSONL (default: shipped corpus)")
    p.add_argument("--variants", type=int, default=10, help="records per template (default 10)")
    p.add_argument("--out", required=True, help="output dataset JSONL")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_datagen_expand)

    p = dg.add_parser("paraphrase", help="augment prompts with backend paraphrases")
    p.add_argument("--in", dest="infile", required=True, help="input dataset JSONL")
    p.add_argument("--per", type=int, default=5, help="paraphrases per record (default 5)")
    p.add_argument("--out", required=True, help="output dataset JSONL")
    p.add_argument("--rejects", help="rejects report JSONL (default: <out>.rejects.jsonl)")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_datagen_paraphrase)

    p = dg.add_parser("split", help="assign train/valid/test splits")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--sizes", required=True, help="train,valid,test counts, e.g. 1000,200,200")
    p.add_argument("--mode", choices=[m.value for m in SplitMode],
                   default=SplitMode.RECORD_RANDOM.value)
    p.add_argument("--only-paraphrases", action="store_true",
                   help="drop paraphrase=0 originals before splitting")
    p.add_argument("--out", required=True)
    _add_shared_flags(p)
    p.set_defaults(func=cmd_datagen_split)

    p = dg.add_parser("export", help="write fine-tune chat files and manifest")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    _add_shared_flags(p)
    p.set_defaults(func=cmd_datagen_export)

    p = sub.add_parser("extract", help="run prompt-to-triple extraction over a dataset")
    p.add_argument("--dataset", required=True, help="dataset JSONL with prompts")
    p.add_argument("--out", required=True, help="outcomes JSONL (resumable by record id)")
    p.add_argument("--mode", choices=["zero_shot", "few_shot", "finetuned"])
    p.add_argument("--vocab", help="vocabulary JSON (default: shipped birthday/anniversary)")
    p.add_argument("--bank", help="few-shot example bank JSONL (required for few_shot)")
    p.add_argument("--per-relation", dest="per_relation", type=int,
                   help="few-shot examples per relation (default 2)")
    p.add_argument("--system-template", dest="system_template", help="system prompt template file")
    p.add_argument("--cues", help="out-of-context cue phrase file")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="score outcomes against gold records")
    p.add_argument("--outcomes", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--vocab")
    p.add_argument("--f1-mode", dest="f1_mode", choices=[m.value for m in F1Mode])
    p.add_argument("--label", help="method label for the report row (default 'run')")
    p.add_argument("--out-dir", dest="out_dir", default="p2t_reports")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except P2TError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
