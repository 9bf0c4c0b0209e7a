"""Bundled scenario and adapter fixture files, addressable by name."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _root() -> Path:
    return Path(resources.files(__package__))


def scenario_path(name: str) -> Path:
    path = _root() / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path


def fixture_dir(name: str) -> Path:
    path = _root() / "fixtures" / name
    if not path.is_dir():
        raise FileNotFoundError(f"no bundled fixture set named {name!r}")
    return path


def resolve_scenario(ref: str) -> Path:
    """A scenario reference: either ``builtin:<name>`` or a filesystem path."""
    if ref.startswith("builtin:"):
        return scenario_path(ref.split(":", 1)[1])
    return Path(ref)
