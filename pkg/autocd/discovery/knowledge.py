from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..dataset import Dataset
from ..errors import ConfigError
from ..models import Knowledge


def _pairs(raw: Any, field_name: str) -> frozenset[tuple[str, str]]:
    out: set[tuple[str, str]] = set()
    for item in raw or []:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"knowledge {field_name} entries must be [from, to] pairs")
        out.add((str(item[0]), str(item[1])))
    return frozenset(out)


def knowledge_from_dict(payload: dict[str, Any]) -> Knowledge:
    tiers = payload.get("tiers") or []
    if not isinstance(tiers, list) or not all(isinstance(t, list) for t in tiers):
        raise ConfigError("knowledge tiers must be a list of column-name lists")
    return Knowledge(
        tiers=tuple(tuple(str(c) for c in tier) for tier in tiers),
        forbidden=_pairs(payload.get("forbidden"), "forbidden"),
        required=_pairs(payload.get("required"), "required"),
    )


def load_knowledge(path: str | Path) -> Knowledge:
    source = Path(path)
    try:
        payload = json.loads(source.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read knowledge file {source}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"knowledge file {source} must hold an object")
    return knowledge_from_dict(payload)


def tier_knowledge(d: Dataset) -> Knowledge | None:
    """Tiers from lag metadata, oldest lag first; None for non-embedded data."""
    tiers = d.tiers()
    if len(tiers) < 2:
        return None
    return Knowledge(tiers=tuple(tuple(t) for t in tiers))


def check_knowledge(k: Knowledge, variables: list[str]) -> None:
    known = set(variables)
    named = {c for tier in k.tiers for c in tier}
    named |= {c for pair in k.forbidden | k.required for c in pair}
    unknown = sorted(named - known)
    if unknown:
        raise ConfigError(f"knowledge names unknown variables: {unknown}")
