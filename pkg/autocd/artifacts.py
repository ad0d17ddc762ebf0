from __future__ import annotations

import json
import platform
from importlib import metadata
from pathlib import Path
from typing import Any

import pandas as pd

TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "scikit-learn", "networkx", "joblib")

# Files carrying wall-clock or host data; excluded from reproducibility checks.
VOLATILE_FILES = ("manifest.json", "environment.json")


def _package_versions() -> dict[str, str | None]:
    out: dict[str, str | None] = {}
    for name in TRACKED_PACKAGES:
        try:
            out[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            out[name] = None
    return out


class ArtifactWriter:
    """Owns one run directory, named by the config hash so reruns overwrite it."""

    def __init__(self, out_dir: Path, config_hash: str) -> None:
        self.out_dir = out_dir
        self.run_dir = out_dir / f"run-{config_hash[:12]}"
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def path(self, rel_path: str) -> Path:
        target = self.run_dir / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        if rel_path not in self.written:
            self.written.append(rel_path)
        return target

    def write_json(self, rel_path: str, payload: Any) -> Path:
        target = self.path(rel_path)
        target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return target

    def write_text(self, rel_path: str, text: str) -> Path:
        target = self.path(rel_path)
        target.write_text(text, encoding="utf-8")
        return target

    def write_bytes(self, rel_path: str, data: bytes) -> Path:
        target = self.path(rel_path)
        target.write_bytes(data)
        return target

    def write_table(self, rel_path: str, rows: list[dict[str, Any]] | pd.DataFrame) -> Path:
        target = self.path(rel_path)
        frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(rows)
        frame.to_csv(target, index=False, float_format="%.10g", lineterminator="\n")
        return target

    def write_environment(self, extra: dict[str, Any] | None = None) -> Path:
        payload: dict[str, Any] = {
            "platform": platform.platform(),
            "python": platform.python_version(),
            "packages": _package_versions(),
            "run_dir": str(self.run_dir),
        }
        if extra:
            payload.update(extra)
        return self.write_json("environment.json", payload)
