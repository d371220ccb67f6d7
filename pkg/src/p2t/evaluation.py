"""Relation-based and triple-based scoring of extraction outcomes.

Each gold record gets exactly one verdict per protocol:

* relation protocol: TP when the extracted predicate equals the gold
  relation (case-insensitive), FP when it names a different vocabulary
  relation, FN when there is no triple or the predicate is outside the
  vocabulary.
* triple protocol: the predicate is judged as above, and a relation TP
  additionally requires the subject and object to inclusion-match the gold
  terms; a term mismatch demotes the verdict to FN.

FPs are tallied against the predicted relation's class, TPs and FNs against
the gold relation's class; each verdict produces exactly one tally, which is
what makes a perfect-recall, sub-perfect-precision run representable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

from .core import Vocabulary, inclusion_match
from .datagen import DatasetRecord
from .errors import GoldRelationUnknown, NoEvaluatedRecords, PairingMismatch
from .parsing import ExtractionOutcome, OutcomeKind


class Protocol(str, Enum):
    RELATION = "relation"
    TRIPLE = "triple"


class Verdict(str, Enum):
    TP = "TP"
    FP = "FP"
    FN = "FN"


class F1Mode(str, Enum):
    HARMONIC_OF_MACRO = "harmonic_of_macro"
    MEAN_OF_PER_CLASS = "mean_of_per_class"


@dataclass(frozen=True)
class Judgement:
    record_id: str
    protocol: Protocol
    verdict: Verdict
    gold_relation: str
    predicted_relation: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "record_id": self.record_id,
            "protocol": self.protocol.value,
            "verdict": self.verdict.value,
            "gold_relation": self.gold_relation,
            "predicted_relation": self.predicted_relation,
        }


@dataclass
class RelationCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class ConfusionCounts:
    """Per-relation confusion tallies; one tally per judged record."""

    per_relation: dict[str, RelationCounts] = field(default_factory=dict)

    def _bucket(self, relation: str) -> RelationCounts:
        return self.per_relation.setdefault(relation, RelationCounts())

    def add_judgement(self, judgement: Judgement) -> None:
        if judgement.verdict is Verdict.TP:
            self._bucket(judgement.gold_relation).tp += 1
        elif judgement.verdict is Verdict.FN:
            self._bucket(judgement.gold_relation).fn += 1
        else:
            assert judgement.predicted_relation is not None
            self._bucket(judgement.predicted_relation).fp += 1

    @classmethod
    def from_judgements(cls, judgements: Sequence[Judgement]) -> "ConfusionCounts":
        counts = cls()
        for judgement in judgements:
            counts.add_judgement(judgement)
        return counts

    def to_dict(self) -> dict[str, dict[str, int]]:
        return {
            name: {"tp": c.tp, "fp": c.fp, "fn": c.fn}
            for name, c in sorted(self.per_relation.items())
        }


def _judge_predicate(
    outcome: ExtractionOutcome, gold: DatasetRecord, vocab: Vocabulary
) -> tuple[Verdict, str | None]:
    gold_rel = vocab.get(gold.relation)
    if gold_rel is None:
        raise GoldRelationUnknown(gold.relation)
    if outcome.kind is not OutcomeKind.EXTRACTED:
        return Verdict.FN, None
    assert outcome.triple is not None
    predicted = vocab.get(outcome.triple.predicate)
    if predicted is None:
        return Verdict.FN, outcome.triple.predicate
    if predicted.name == gold_rel.name:
        return Verdict.TP, predicted.name
    return Verdict.FP, predicted.name


def judge_relation(
    outcome: ExtractionOutcome, gold: DatasetRecord, vocab: Vocabulary
) -> Judgement:
    """Score the predicate alone against the gold relation."""
    verdict, predicted = _judge_predicate(outcome, gold, vocab)
    return Judgement(gold.id, Protocol.RELATION, verdict, gold.relation, predicted)


def judge_triple(
    outcome: ExtractionOutcome, gold: DatasetRecord, vocab: Vocabulary
) -> Judgement:
    """Score the whole triple: predicate as in the relation protocol, subject
    and object by inclusion; a term mismatch turns a relation TP into FN."""
    verdict, predicted = _judge_predicate(outcome, gold, vocab)
    if verdict is Verdict.TP:
        assert outcome.triple is not None
        terms_ok = inclusion_match(outcome.triple.subject, gold.subject_gt) and inclusion_match(
            outcome.triple.object, gold.object_gt
        )
        if not terms_ok:
            verdict = Verdict.FN
    return Judgement(gold.id, Protocol.TRIPLE, verdict, gold.relation, predicted)


@dataclass(frozen=True)
class MacroMetrics:
    precision: float
    recall: float
    f1: float


def _per_class(counts: RelationCounts) -> tuple[float, float, float]:
    precision = 1.0 if counts.tp + counts.fp == 0 else counts.tp / (counts.tp + counts.fp)
    recall = 0.0 if counts.tp + counts.fn == 0 else counts.tp / (counts.tp + counts.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def compute_metrics(
    counts: ConfusionCounts, f1_mode: F1Mode = F1Mode.HARMONIC_OF_MACRO
) -> MacroMetrics:
    """Unweighted macro precision/recall over relations that have evaluated
    gold records (tp+fn > 0). harmonic_of_macro reports F1 = 2PR/(P+R) of the
    macro values; mean_of_per_class averages per-relation F1 instead."""
    evaluated = {
        name: c for name, c in counts.per_relation.items() if c.tp + c.fn > 0
    }
    if not evaluated:
        raise NoEvaluatedRecords("no relation has any evaluated gold records")
    per = {name: _per_class(c) for name, c in evaluated.items()}
    macro_p = sum(p for p, _, _ in per.values()) / len(per)
    macro_r = sum(r for _, r, _ in per.values()) / len(per)
    if f1_mode is F1Mode.HARMONIC_OF_MACRO:
        f1 = 0.0 if macro_p + macro_r == 0 else 2 * macro_p * macro_r / (macro_p + macro_r)
    else:
        f1 = sum(f for _, _, f in per.values()) / len(per)
    return MacroMetrics(macro_p, macro_r, f1)


@dataclass(frozen=True)
class EvalReport:
    protocol: Protocol
    counts: ConfusionCounts
    macro_precision: float
    macro_recall: float
    macro_f1: float
    f1_mode: F1Mode

    def to_dict(self) -> dict[str, Any]:
        return {
            "protocol": self.protocol.value,
            "counts": self.counts.to_dict(),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "f1_mode": self.f1_mode.value,
        }


@dataclass(frozen=True)
class EvalRun:
    relation: EvalReport
    triple: EvalReport
    judgements: tuple[Judgement, ...]


def evaluate_run(
    outcomes: Mapping[str, ExtractionOutcome],
    gold: Sequence[DatasetRecord],
    vocab: Vocabulary,
    f1_mode: F1Mode = F1Mode.HARMONIC_OF_MACRO,
) -> EvalRun:
    """Judge every (outcome, gold) pair under both protocols in one pass.

    Pairing is by record id and must be total in both directions; the
    per-record judgements are kept for audit output.
    """
    gold_ids = [rec.id for rec in gold]
    missing = sorted(set(gold_ids) - set(outcomes))
    extra = sorted(set(outcomes) - set(gold_ids))
    if missing or extra:
        raise PairingMismatch(missing, extra)
    if not gold:
        raise NoEvaluatedRecords("empty pairing")

    judgements: list[Judgement] = []
    rel_counts = ConfusionCounts()
    tri_counts = ConfusionCounts()
    for rec in gold:
        outcome = outcomes[rec.id]
        j_rel = judge_relation(outcome, rec, vocab)
        j_tri = judge_triple(outcome, rec, vocab)
        rel_counts.add_judgement(j_rel)
        tri_counts.add_judgement(j_tri)
        judgements.extend((j_rel, j_tri))

    rel_metrics = compute_metrics(rel_counts, f1_mode)
    tri_metrics = compute_metrics(tri_counts, f1_mode)
    return EvalRun(
        relation=EvalReport(
            Protocol.RELATION, rel_counts,
            rel_metrics.precision, rel_metrics.recall, rel_metrics.f1, f1_mode,
        ),
        triple=EvalReport(
            Protocol.TRIPLE, tri_counts,
            tri_metrics.precision, tri_metrics.recall, tri_metrics.f1, f1_mode,
        ),
        judgements=tuple(judgements),
    )
