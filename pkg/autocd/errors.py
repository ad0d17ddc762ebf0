from __future__ import annotations

from typing import Any


class AutoCDError(Exception):
    def __init__(self, message: str, details: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.details: dict[str, Any] = dict(details or {})


class InputError(AutoCDError, ValueError):
    """Bad arguments: unknown node or column, self query, shape mismatch."""


class UnsupportedKindError(InputError):
    """Graph kind not accepted by the operation."""


class SampleSizeError(InputError):
    pass


class GraphFormatError(InputError):
    def __init__(
        self,
        message: str,
        path: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        where = ""
        if path is not None:
            where = path
            if line is not None:
                where += f":{line}"
                if column is not None:
                    where += f":{column}"
            where += ": "
        super().__init__(f"{where}{message}", {"path": path, "line": line, "column": column})
        self.path = path
        self.line = line
        self.column = column


class ConfigError(AutoCDError, ValueError):
    pass


class DiscoveryError(AutoCDError, RuntimeError):
    """A stage could not produce any usable result."""
