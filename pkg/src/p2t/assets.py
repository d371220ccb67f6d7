"""Access to the data files shipped inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(name: str) -> Path:
    """Filesystem path of a shipped data file (package is installed flat)."""
    return Path(str(resources.files("p2t").joinpath("data", name)))


def data_text(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")


def default_vocabulary_path() -> Path:
    return data_path("vocabulary.json")


def default_templates_path() -> Path:
    return data_path("templates.jsonl")


def default_example_bank_path() -> Path:
    return data_path("example_bank.jsonl")
