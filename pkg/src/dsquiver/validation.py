"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path

from .exceptions import InvalidInput
from .frontend import DSInstance
from .quiver import Quiver, StarShape, dims


def load_json(source) -> object:
    """Parse a path, JSON text or an already-decoded object."""
    if isinstance(source, (dict, list)):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith(("{", "["))):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise InvalidInput(f"cannot read {source}: {exc}") from exc
    else:
        text = source
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed JSON: {exc}") from exc


def check_instance(obj) -> DSInstance:
    if isinstance(obj, DSInstance):
        return obj
    data = load_json(obj)
    if not isinstance(data, Mapping):
        raise InvalidInput("instance JSON must be an object")
    return DSInstance.from_dict(data)


def check_star(obj) -> StarShape:
    if isinstance(obj, StarShape):
        return obj
    if isinstance(obj, Mapping):
        return StarShape.from_dict(obj)
    try:
        return StarShape(tuple(obj))
    except TypeError as exc:
        raise InvalidInput(f"not a star shape: {obj!r}") from exc


def check_dim_vector(q: Quiver, a, *, nonnegative: bool = True) -> dict:
    if isinstance(a, Mapping) and "dims" in a:
        from .quiver import dims_from_dict

        a = dims_from_dict(q, a)
    return dims(q, a, allow_negative=not nonnegative)


def parse_int_list(text: str) -> list[int]:
    """``"2,1,1,1"`` or a JSON list -> list of ints."""
    text = text.strip()
    try:
        if text.startswith("["):
            vals = json.loads(text)
        else:
            vals = [int(x) for x in text.split(",") if x.strip()]
        return [int(v) for v in vals]
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"expected a list of integers, got {text!r}") from exc
