import pytest

from p2t.core import Relation, Vocabulary


@pytest.fixture
def vocab() -> Vocabulary:
    return Vocabulary(
        (
            Relation("birthday", "the date on which a person was born"),
            Relation("anniversary", "the date a couple married or began their partnership"),
        )
    )
