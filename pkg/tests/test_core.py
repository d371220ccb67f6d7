import random
import string

import pytest

from p2t.core import (
    NormalizedTerm,
    Relation,
    Triple,
    Vocabulary,
    inclusion_match,
    normalize_term,
)
from p2t.errors import EmptyVocabulary

# ---------------------------------------------------------------------------
# hand-written character-level oracle for the normalization rules

_PUNCT = set(".,;:!?'\"()[]`")


def oracle_normalize(text: str) -> list[str]:
    words, cur = [], []
    for ch in text:
        if ch.isspace():
            if cur:
                words.append("".join(cur))
                cur = []
        else:
            cur.append(ch.lower())
    if cur:
        words.append("".join(cur))
    out = []
    for w in words:
        i, j = 0, len(w)
        while i < j and w[i] in _PUNCT:
            i += 1
        while j > i and w[j - 1] in _PUNCT:
            j -= 1
        w = w[i:j]
        for suf in ("st", "nd", "rd", "th"):
            if w.endswith(suf) and w[: -len(suf)] and w[: -len(suf)].isdigit():
                w = w[: -len(suf)]
                break
        if w:
            out.append(w)
    return out


def oracle_contiguous(small, big) -> bool:
    return any(list(big[i : i + len(small)]) == list(small) for i in range(len(big) - len(small) + 1))


def test_normalize_paper_example():
    assert normalize_term("November 14th").tokens == ("november", "14")


def test_normalize_empty_input():
    assert normalize_term("").tokens == ()


def test_normalize_strips_edge_punctuation():
    assert normalize_term("I, me.").tokens == ("i", "me")


def test_normalize_keeps_slashed_dates_whole():
    assert normalize_term("14/11/1979").tokens == ("14/11/1979",)


def test_normalize_ordinals():
    assert normalize_term("1st 2nd 3rd 21st 11th 12th 13th").tokens == (
        "1", "2", "3", "21", "11", "12", "13",
    )
    # non-numeric heads are not ordinals
    assert normalize_term("forth worth").tokens == ("forth", "worth")


def test_normalize_keeps_internal_punctuation():
    assert normalize_term("don't father-in-law").tokens == ("don't", "father-in-law")


def test_normalize_matches_character_oracle_on_random_corpus():
    rng = random.Random(42)
    alphabet = string.ascii_letters + string.digits + ".,;:!?'\"()[]` -/\t\n"
    for _ in range(2000):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
        assert list(normalize_term(text).tokens) == oracle_normalize(text), repr(text)


def test_normalize_idempotent():
    rng = random.Random(7)
    alphabet = string.ascii_letters + string.digits + ".,!?' -/"
    for _ in range(500):
        text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
        once = normalize_term(text).tokens
        again = normalize_term(" ".join(once)).tokens
        assert once == again


def test_inclusion_paper_example():
    assert inclusion_match("I", "I me") is True


def test_inclusion_identity():
    assert inclusion_match("birthday", "birthday") is True


def test_inclusion_derived_cases():
    assert inclusion_match("born in Paris", "Paris") is True
    assert inclusion_match("Paris", "London Paris France") is True
    assert inclusion_match("Paris", "London France") is False


def test_inclusion_requires_contiguity():
    assert inclusion_match("14 November", "14 birthday November") is False


def test_inclusion_empty_rules():
    assert inclusion_match("", "") is True
    assert inclusion_match("...", "!!") is True  # both normalize to nothing
    assert inclusion_match("", "something") is False
    assert inclusion_match("something", "...") is False


def _random_phrase(rng: random.Random) -> str:
    words = ["alpha", "beta", "gamma", "delta", "14th", "nov", "x.y", "1979"]
    return " ".join(rng.choice(words) for _ in range(rng.randint(0, 4)))


def test_inclusion_symmetric_and_reflexive():
    rng = random.Random(3)
    for _ in range(500):
        a, b = _random_phrase(rng), _random_phrase(rng)
        assert inclusion_match(a, b) == inclusion_match(b, a)
        assert inclusion_match(a, a) is True


def test_equality_implies_inclusion():
    rng = random.Random(5)
    for _ in range(200):
        a = _random_phrase(rng)
        assert inclusion_match(a, a)


def test_inclusion_agrees_with_bruteforce_subsequence_oracle():
    rng = random.Random(11)
    for _ in range(1000):
        a, b = _random_phrase(rng), _random_phrase(rng)
        ta, tb = normalize_term(a).tokens, normalize_term(b).tokens
        if not ta and not tb:
            expected = True
        elif not ta or not tb:
            expected = False
        else:
            expected = oracle_contiguous(ta, tb) or oracle_contiguous(tb, ta)
        assert inclusion_match(a, b) == expected


def test_relation_invariants():
    with pytest.raises(ValueError):
        Relation("")
    with pytest.raises(ValueError):
        Relation("two words")


def test_vocabulary_invariants():
    with pytest.raises(EmptyVocabulary):
        Vocabulary(())
    with pytest.raises(ValueError):
        Vocabulary((Relation("birthday"), Relation("Birthday")))


def test_vocabulary_lookup_case_insensitive(vocab):
    assert vocab.get(" Birthday ").name == "birthday"
    assert vocab.get("unknown") is None


def test_triple_requires_nonempty_fields():
    with pytest.raises(ValueError):
        Triple("", "p", "o")
    with pytest.raises(ValueError):
        Triple("s", "  ", "o")
    t = Triple(" s ", "p", "o")  # nonempty after trimming is enough
    assert t.subject == " s "


def test_normalized_term_is_value_type():
    assert NormalizedTerm(("a",)) == NormalizedTerm(("a",))
