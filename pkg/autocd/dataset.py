from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, InputError, SampleSizeError

logger = logging.getLogger(__name__)

MAX_INFERRED_LEVELS = 10
CSV_FLOAT_FORMAT = "%.12g"


class ColumnKind(str, Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnType:
    kind: ColumnKind
    levels: tuple[Any, ...] = ()

    @property
    def is_categorical(self) -> bool:
        return self.kind is ColumnKind.CATEGORICAL

    def to_dict(self, name: str) -> dict[str, Any]:
        out: dict[str, Any] = {"name": name, "type": self.kind.value}
        if self.is_categorical:
            out["levels"] = [_plain(v) for v in self.levels]
        return out


CONTINUOUS = ColumnType(ColumnKind.CONTINUOUS)


def categorical(levels: Iterable[Any]) -> ColumnType:
    return ColumnType(ColumnKind.CATEGORICAL, tuple(levels))


@dataclass(frozen=True)
class LagInfo:
    variable: str
    lag: int


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    return value


class Dataset:
    """Column-typed sample table.

    Continuous columns are float64. Categorical columns keep their raw values
    and expose integer codes over the declared levels.
    """

    def __init__(
        self,
        frame: pd.DataFrame,
        types: Mapping[str, ColumnType] | None = None,
        lag_meta: Mapping[str, LagInfo] | None = None,
    ) -> None:
        frame = frame.reset_index(drop=True)
        if frame.columns.has_duplicates:
            raise InputError("duplicate column names")
        if frame.isna().to_numpy().any():
            bad = [str(c) for c in frame.columns if frame[c].isna().any()]
            raise InputError(f"missing values in columns: {', '.join(bad)}")
        resolved: dict[str, ColumnType] = {}
        for name in frame.columns:
            ctype = (types or {}).get(name)
            if ctype is None:
                ctype = _infer_type(frame[name])[0]
            resolved[str(name)] = ctype
        frame.columns = [str(c) for c in frame.columns]
        for name, ctype in resolved.items():
            if ctype.is_categorical:
                if not ctype.levels:
                    ctype = categorical(sorted(pd.unique(frame[name]).tolist(), key=str))
                    resolved[name] = ctype
                codes = pd.Categorical(frame[name], categories=list(ctype.levels)).codes
                if (codes < 0).any():
                    raise InputError(f"column {name!r} has values outside its declared levels")
            else:
                try:
                    frame[name] = frame[name].astype(np.float64)
                except (TypeError, ValueError) as exc:
                    raise InputError(f"column {name!r} is not numeric: {exc}") from exc
        self._frame = frame
        self._types = resolved
        self._lag_meta: dict[str, LagInfo] = dict(lag_meta or {})
        for name in self._lag_meta:
            self.require(name)
        self._cache: dict[tuple[str, str], np.ndarray] = {}

    @property
    def frame(self) -> pd.DataFrame:
        return self._frame

    @property
    def columns(self) -> list[str]:
        return list(self._frame.columns)

    @property
    def n_rows(self) -> int:
        return len(self._frame)

    @property
    def types(self) -> dict[str, ColumnType]:
        return dict(self._types)

    @property
    def lag_meta(self) -> dict[str, LagInfo]:
        return dict(self._lag_meta)

    def require(self, *names: str) -> None:
        for name in names:
            if name not in self._types:
                raise InputError(f"unknown column {name!r}")

    def column_type(self, name: str) -> ColumnType:
        self.require(name)
        return self._types[name]

    def is_categorical(self, name: str) -> bool:
        return self.column_type(name).is_categorical

    def values(self, name: str) -> np.ndarray:
        key = ("values", name)
        if key not in self._cache:
            if self.is_categorical(name):
                self._cache[key] = self.codes(name)
            else:
                self._cache[key] = self._frame[name].to_numpy(dtype=np.float64)
        return self._cache[key]

    def codes(self, name: str) -> np.ndarray:
        key = ("codes", name)
        if key not in self._cache:
            ctype = self.column_type(name)
            if not ctype.is_categorical:
                raise InputError(f"column {name!r} is not categorical")
            cat = pd.Categorical(self._frame[name], categories=list(ctype.levels))
            self._cache[key] = np.asarray(cat.codes, dtype=np.int64)
        return self._cache[key]

    def n_levels(self, name: str) -> int:
        return len(self.column_type(name).levels)

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.values(n).astype(np.float64) for n in names])

    def design(self, names: Sequence[str], drop_first: bool = True) -> np.ndarray:
        """Predictor matrix with categorical columns one-hot expanded."""
        blocks: list[np.ndarray] = []
        for name in names:
            if self.is_categorical(name):
                codes = self.codes(name)
                start = 1 if drop_first else 0
                for level in range(start, self.n_levels(name)):
                    blocks.append((codes == level).astype(np.float64))
            else:
                blocks.append(self.values(name).astype(np.float64))
        if not blocks:
            return np.empty((self.n_rows, 0))
        return np.column_stack(blocks)

    def take(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        index = np.asarray(rows, dtype=np.int64)
        return Dataset(self._frame.iloc[index], self._types, self._lag_meta)

    def select(self, columns: Iterable[str]) -> "Dataset":
        cols = list(columns)
        self.require(*cols)
        meta = {k: v for k, v in self._lag_meta.items() if k in cols}
        return Dataset(self._frame[cols], {c: self._types[c] for c in cols}, meta)

    def split(self, n_test: int) -> tuple["Dataset", "Dataset"]:
        if n_test <= 0 or n_test >= self.n_rows:
            raise SampleSizeError(f"cannot hold out {n_test} of {self.n_rows} rows")
        cut = self.n_rows - n_test
        return self.take(np.arange(cut)), self.take(np.arange(cut, self.n_rows))

    def tiers(self) -> list[list[str]]:
        if not self._lag_meta:
            return []
        lags = sorted({info.lag for info in self._lag_meta.values()}, reverse=True)
        return [[c for c in self.columns if c in self._lag_meta and self._lag_meta[c].lag == lag] for lag in lags]

    def schema(self) -> list[dict[str, Any]]:
        out = []
        for name in self.columns:
            entry = self._types[name].to_dict(name)
            if name in self._lag_meta:
                entry["variable"] = self._lag_meta[name].variable
                entry["lag"] = self._lag_meta[name].lag
            out.append(entry)
        return out

    @classmethod
    def from_arrays(
        cls,
        data: Mapping[str, Sequence[Any] | np.ndarray],
        types: Mapping[str, ColumnType] | None = None,
        lag_meta: Mapping[str, LagInfo] | None = None,
    ) -> "Dataset":
        frame = pd.DataFrame({k: np.asarray(v) for k, v in data.items()})
        if types is None:
            types = {k: CONTINUOUS for k in data if np.issubdtype(np.asarray(data[k]).dtype, np.floating)}
        return cls(frame, types, lag_meta)


def _infer_type(series: pd.Series) -> tuple[ColumnType, bool]:
    if not pd.api.types.is_numeric_dtype(series) or pd.api.types.is_bool_dtype(series):
        return categorical(sorted(pd.unique(series).tolist(), key=str)), False
    values = series.to_numpy(dtype=np.float64)
    distinct = np.unique(values)
    if len(distinct) <= MAX_INFERRED_LEVELS and np.all(np.equal(np.mod(distinct, 1), 0)):
        return categorical(int(v) for v in distinct), True
    return CONTINUOUS, False


def _parse_schema(raw: Any, source: Path) -> tuple[dict[str, ColumnType], dict[str, LagInfo]]:
    entries = raw.get("columns") if isinstance(raw, dict) else raw
    if not isinstance(entries, list):
        raise ConfigError(f"schema {source} must be a list of column entries")
    types: dict[str, ColumnType] = {}
    meta: dict[str, LagInfo] = {}
    for item in entries:
        if not isinstance(item, dict) or "name" not in item:
            raise ConfigError(f"schema {source}: every entry needs a name")
        name = str(item["name"])
        kind = str(item.get("type", "continuous"))
        if kind == ColumnKind.CONTINUOUS.value:
            types[name] = CONTINUOUS
        elif kind == ColumnKind.CATEGORICAL.value:
            types[name] = categorical(item.get("levels") or ())
        else:
            raise ConfigError(f"schema {source}: unknown column type {kind!r} for {name!r}")
        if item.get("lag") is not None:
            meta[name] = LagInfo(str(item.get("variable") or name), int(item["lag"]))
    return types, meta


def schema_path_for(csv_path: Path) -> Path:
    return csv_path.with_name(f"{csv_path.stem}.schema.json")


def load_csv(path: str | Path, schema_path: str | Path | None = None) -> Dataset:
    csv_path = Path(path)
    if not csv_path.exists():
        raise InputError(f"data file not found: {csv_path}")
    frame = pd.read_csv(csv_path)
    sidecar = Path(schema_path) if schema_path else schema_path_for(csv_path)
    if sidecar.exists():
        types, meta = _parse_schema(json.loads(sidecar.read_text(encoding="utf-8")), sidecar)
        missing = [c for c in types if c not in frame.columns]
        if missing:
            raise ConfigError(f"schema {sidecar} names columns absent from data: {missing}")
        for name, ctype in list(types.items()):
            if ctype.is_categorical and ctype.levels and pd.api.types.is_numeric_dtype(frame[name]):
                # JSON levels come back as ints or strings; match the CSV dtype.
                types[name] = categorical(frame[name].dtype.type(v).item() for v in ctype.levels)
        return Dataset(frame, types, meta)
    if schema_path:
        raise InputError(f"schema file not found: {sidecar}")
    types = {}
    guessed = []
    for name in frame.columns:
        ctype, heuristic = _infer_type(frame[name])
        types[str(name)] = ctype
        if heuristic:
            guessed.append(str(name))
    if guessed:
        logger.warning(
            "no schema for %s; treating integer columns with <= %d values as categorical: %s",
            csv_path,
            MAX_INFERRED_LEVELS,
            ", ".join(guessed),
        )
    return Dataset(frame, types)


def write_csv(d: Dataset, path: str | Path) -> tuple[Path, Path]:
    csv_path = Path(path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    d.frame.to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    sidecar = schema_path_for(csv_path)
    sidecar.write_text(json.dumps({"columns": d.schema()}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, sidecar
