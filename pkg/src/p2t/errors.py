"""Exception hierarchy shared across the toolkit.

Three branches matter to callers: UsageError (bad flags/config), DataError
(bad input files or infeasible requests), and BackendError (anything that
went wrong talking to a model). The CLI maps them to exit codes 1/2/3.
"""

from __future__ import annotations


class P2TError(Exception):
    """Base class for all toolkit errors."""


class UsageError(P2TError):
    """Command line or configuration problem."""


class DataError(P2TError):
    """Invalid input data or an unsatisfiable data request."""


class SchemaError(DataError):
    """A file violates its expected schema."""

    def __init__(self, path: str, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class DuplicateIdError(DataError):
    pass


class EmptyVocabulary(DataError):
    pass


class EmptyPrompt(DataError):
    pass


class MissingExamples(DataError):
    """The example bank lacks coverage for a relation."""

    def __init__(self, relation: str, needed: int, available: int) -> None:
        super().__init__(
            f"example bank has {available} example(s) for relation "
            f"'{relation}', need {needed}"
        )
        self.relation = relation


class MissingGroundTruth(DataError):
    pass


class TemplateError(DataError):
    """A prompt template file failed placeholder validation."""


class InfeasibleSplit(DataError):
    pass


class MissingSplit(DataError):
    pass


class GoldRelationUnknown(DataError):
    def __init__(self, relation: str) -> None:
        super().__init__(f"gold relation '{relation}' is not in the vocabulary")
        self.relation = relation


class PairingMismatch(DataError):
    """Outcome ids and gold record ids do not pair one-to-one."""

    def __init__(self, missing: list[str], extra: list[str]) -> None:
        parts = []
        if missing:
            parts.append(f"gold ids without outcomes: {missing[:5]}")
        if extra:
            parts.append(f"outcome ids without gold: {extra[:5]}")
        super().__init__("; ".join(parts) or "empty pairing")
        self.missing = missing
        self.extra = extra


class NoEvaluatedRecords(DataError):
    pass


class BackendError(P2TError):
    """Base class for completion backend failures."""


class NetworkError(BackendError):
    pass


class HttpStatusError(BackendError):
    def __init__(self, status: int, body_excerpt: str) -> None:
        super().__init__(f"HTTP {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class RateLimitedError(BackendError):
    pass


class MalformedResponseError(BackendError):
    pass


class TapeMissError(BackendError):
    def __init__(self, key: tuple[str, str]) -> None:
        super().__init__(f"no tape entry for mode={key[0]!r} user_text={key[1]!r}")
        self.key = key
