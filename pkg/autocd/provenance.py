from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable


def file_sha256(path: Path) -> tuple[str, int]:
    h = hashlib.sha256()
    size = 0
    with path.open("rb") as f:
        while True:
            chunk = f.read(1024 * 1024)
            if not chunk:
                break
            size += len(chunk)
            h.update(chunk)
    return h.hexdigest(), size


def build_manifest(root: Path, rel_paths: Iterable[str], skip: Iterable[str] = ()) -> list[dict[str, Any]]:
    """Digest records for files under ``root``, sorted by path."""
    skipped = set(skip)
    records: list[dict[str, Any]] = []
    for rel in sorted(set(rel_paths) - skipped):
        path = root / rel
        if not path.is_file():
            continue
        digest, size = file_sha256(path)
        records.append({"path": rel, "bytes": size, "sha256": digest})
    return records


def input_records(paths: Iterable[Path | str | None]) -> list[dict[str, Any]]:
    records = []
    for raw in paths:
        if raw is None:
            continue
        path = Path(raw)
        if not path.is_file():
            continue
        digest, size = file_sha256(path)
        records.append({"path": str(path), "bytes": size, "sha256": digest})
    return records


def manifest_sha256(manifest_files: list[dict[str, Any]]) -> str:
    payload = json.dumps({"files": manifest_files}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()
