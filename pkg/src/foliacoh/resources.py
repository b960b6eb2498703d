"""Shipped example models and JSON schemas."""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

MODELS = ("point", "circle_one_chart", "circle_pushout", "arrow", "z2", "point_fiber", "edge_fiber")
FIBERED_MODELS = ("point_fiber", "edge_fiber")


def _data():
    return files("foliacoh") / "data"


def model_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    return Path(str(_data() / "models" / f"{stem}.json"))


def load_model(name: str) -> dict:
    return json.loads(model_path(name).read_text(encoding="utf-8"))


def load_schema(name: str) -> dict:
    return json.loads((_data() / "schemas" / f"{name}.json").read_text(encoding="utf-8"))


def resolve_model(path: str) -> Path:
    """A filesystem path if it exists, else a shipped model of that name."""
    p = Path(path)
    if p.exists():
        return p
    shipped = model_path(p.name)
    return shipped if shipped.exists() else p
