#!/usr/bin/env python3
"""Independent brute-force rescoring of an extraction run.

Deliberately shares no code with the package: normalization walks characters
one at a time, containment is a nested index scan, and the classification
rules are applied record by record exactly as written. Used by the test
suite to cross-check ConfusionCounts; also runnable standalone:

    python3 tests/bruteforce_eval.py outcomes.jsonl gold.jsonl vocab.json
"""

import json
import sys

EDGE_PUNCT = set(".,;:!?'\"()[]`")
ORDINAL_SUFFIXES = ("st", "nd", "rd", "th")


def bf_tokens(text):
    # lowercase char walk; split on whitespace runs
    words = []
    current = []
    for ch in text:
        if ch.isspace():
            if current:
                words.append("".join(current))
                current = []
        else:
            current.append(ch.lower())
    if current:
        words.append("".join(current))

    tokens = []
    for word in words:
        start = 0
        end = len(word)
        while start < end and word[start] in EDGE_PUNCT:
            start += 1
        while end > start and word[end - 1] in EDGE_PUNCT:
            end -= 1
        word = word[start:end]
        for suffix in ORDINAL_SUFFIXES:
            if word.endswith(suffix):
                head = word[: -len(suffix)]
                if head and all(c.isdigit() for c in head):
                    word = head
                break
        if word:
            tokens.append(word)
    return tokens


def bf_contained(small, big):
    if len(small) > len(big):
        return False
    for i in range(len(big) - len(small) + 1):
        hit = True
        for j in range(len(small)):
            if big[i + j] != small[j]:
                hit = False
                break
        if hit:
            return True
    return False


def bf_inclusion(a, b):
    ta, tb = bf_tokens(a), bf_tokens(b)
    if not ta and not tb:
        return True
    if not ta or not tb:
        return False
    return bf_contained(ta, tb) or bf_contained(tb, ta)


def bf_recompute(outcome_rows, gold_rows, vocab_names):
    """Apply the classification rules record by record; returns per-protocol
    per-relation {tp, fp, fn} dicts."""
    lower_to_canonical = {name.lower(): name for name in vocab_names}
    outcomes_by_id = {row["id"]: row for row in outcome_rows}
    counts = {
        "relation": {name: {"tp": 0, "fp": 0, "fn": 0} for name in vocab_names},
        "triple": {name: {"tp": 0, "fp": 0, "fn": 0} for name in vocab_names},
    }
    for gold in gold_rows:
        row = outcomes_by_id[gold["id"]]
        gold_rel = gold["relation"]

        predicted = None
        if row["kind"] == "extracted":
            predicted = lower_to_canonical.get(row["predicate"].strip().lower())

        # relation protocol: equality on predicate; out-of-set -> FN;
        # in-set but different -> FP against the predicted relation
        if predicted is None:
            counts["relation"][gold_rel]["fn"] += 1
            rel_tp = False
        elif predicted == gold_rel:
            counts["relation"][gold_rel]["tp"] += 1
            rel_tp = True
        else:
            counts["relation"][predicted]["fp"] += 1
            rel_tp = False

        # triple protocol: predicate as above, subject/object by inclusion
        if predicted is None:
            counts["triple"][gold_rel]["fn"] += 1
        elif predicted != gold_rel:
            counts["triple"][predicted]["fp"] += 1
        elif (
            rel_tp
            and bf_inclusion(row["subject"], gold["subject_gt"])
            and bf_inclusion(row["object"], gold["object_gt"])
        ):
            counts["triple"][gold_rel]["tp"] += 1
        else:
            counts["triple"][gold_rel]["fn"] += 1
    return counts


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def main(argv):
    outcomes_path, gold_path, vocab_path = argv[1:4]
    with open(vocab_path, encoding="utf-8") as fh:
        vocab_names = [rel["name"] for rel in json.load(fh)["relations"]]
    counts = bf_recompute(_read_jsonl(outcomes_path), _read_jsonl(gold_path), vocab_names)
    print(json.dumps(counts, indent=2))


if __name__ == "__main__":
    main(sys.argv)
