"""Registry of valid functions, arguments, and function-argument associations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .expr import ApiCall, flatten


class SpecFormatError(ValueError):
    """Malformed spec file or invariant-violating spec contents."""


@dataclass(frozen=True)
class ApiSpec:
    functions: frozenset[str] = frozenset()
    arguments: frozenset[str] = frozenset()
    associations: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "functions", frozenset(self.functions))
        object.__setattr__(self, "arguments", frozenset(self.arguments))
        assoc = {f: frozenset(a) for f, a in dict(self.associations).items()}
        object.__setattr__(self, "associations", assoc)
        for f, args in assoc.items():
            if f not in self.functions:
                raise SpecFormatError(f"association key {f!r} not in functions")
            unknown = args - self.arguments
            if unknown:
                raise SpecFormatError(
                    f"association {f!r} references unknown arguments {sorted(unknown)}"
                )

    def args_for(self, function: str) -> frozenset[str]:
        """Valid argument names for ``function``; empty set if unknown."""
        return self.associations.get(function, frozenset())

    def __eq__(self, other):
        if not isinstance(other, ApiSpec):
            return NotImplemented
        return (
            self.functions == other.functions
            and self.arguments == other.arguments
            and {f: a for f, a in self.associations.items() if a}
            == {f: a for f, a in other.associations.items() if a}
        )


def derive_from_corpus(calls: Iterable[ApiCall]) -> ApiSpec:
    """Collect functions, arguments, and associations seen anywhere in the corpus."""
    functions: set[str] = set()
    arguments: set[str] = set()
    associations: dict[str, set[str]] = {}
    for call in calls:
        for flat in flatten(call):
            functions.add(flat.function)
            assoc = associations.setdefault(flat.function, set())
            for name, _value in flat.args:
                arguments.add(name)
                assoc.add(name)
    return ApiSpec(frozenset(functions), frozenset(arguments), associations)


def save_spec(spec: ApiSpec, path: str | Path) -> None:
    """Write a spec file; arrays sorted for byte-stable output."""
    doc = {
        "functions": sorted(spec.functions),
        "arguments": sorted(spec.arguments),
        "associations": {f: sorted(a) for f, a in sorted(spec.associations.items())},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_spec(path: str | Path) -> ApiSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SpecFormatError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise SpecFormatError(f"{path}: top level must be an object")
    for key, kind in (("functions", list), ("arguments", list), ("associations", dict)):
        if key not in doc:
            raise SpecFormatError(f"{path}: missing key {key!r}")
        if not isinstance(doc[key], kind):
            raise SpecFormatError(f"{path}: key {key!r} must be {kind.__name__}")
    for key in ("functions", "arguments"):
        for item in doc[key]:
            if not isinstance(item, str):
                raise SpecFormatError(f"{path}: {key} entries must be strings")
    assoc: dict[str, frozenset[str]] = {}
    for f, args in doc["associations"].items():
        if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
            raise SpecFormatError(f"{path}: associations[{f!r}] must be a string array")
        assoc[f] = frozenset(args)
    try:
        return ApiSpec(frozenset(doc["functions"]), frozenset(doc["arguments"]), assoc)
    except SpecFormatError as e:
        raise SpecFormatError(f"{path}: {e}") from e
