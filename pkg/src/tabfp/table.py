"""Mixed-type tables with a primary key.

A :class:`Dataset` keeps two views of every feature column: the parsed values
(``float64`` with NaN for numeric columns, ``str`` tokens for categorical ones)
and the raw cell text read from disk.  Writing uses the raw text for untouched
cells, so a fingerprinted copy differs from its source only in marked cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CellTypeError, DuplicateKey, SchemaMismatch

NUMERIC = "numeric"
CATEGORICAL = "categorical"
PRIMARY_KEY = "primary_key"
FEATURE = "feature"

MISSING_TOKEN = "?"
MISSING_MARKERS = frozenset({"", "?"})


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str = CATEGORICAL
    role: str = FEATURE

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.role not in (PRIMARY_KEY, FEATURE):
            raise ValueError(f"unknown attribute role {self.role!r}")


def format_number(value: float, integral: bool) -> str:
    if math.isnan(value):
        return ""
    if integral and float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def _parse_float(text: str) -> float | None:
    try:
        return float(text)
    except ValueError:
        return None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table: one primary-key column plus ``v`` feature columns."""

    schema: tuple[AttributeSchema, ...]
    pk: np.ndarray
    columns: Mapping[str, np.ndarray]
    text: Mapping[str, np.ndarray] = field(default=None)
    integral: frozenset = frozenset()

    def __post_init__(self):
        keys = [a for a in self.schema if a.role == PRIMARY_KEY]
        if len(keys) != 1:
            raise SchemaMismatch("exactly one primary-key attribute is required")
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise SchemaMismatch("attribute names must be unique")
        pk = np.asarray(self.pk, dtype=object)
        object.__setattr__(self, "pk", pk)
        if len(pk) < 1:
            raise SchemaMismatch("a dataset needs at least one record")
        if len(set(pk.tolist())) != len(pk):
            raise DuplicateKey("primary-key values must be unique")
        if any(p is None or p in MISSING_MARKERS for p in pk):
            raise SchemaMismatch("primary-key values must be present")
        features = [a for a in self.schema if a.role == FEATURE]
        if set(self.columns) != {a.name for a in features}:
            raise SchemaMismatch("columns do not match the schema")
        cols = {}
        for a in features:
            col = self.columns[a.name]
            if a.kind == NUMERIC:
                col = np.asarray(col, dtype=np.float64)
            else:
                col = np.asarray(col, dtype=object)
            if len(col) != len(pk):
                raise SchemaMismatch(f"column {a.name!r} has wrong length")
            col.flags.writeable = False
            cols[a.name] = col
        object.__setattr__(self, "columns", cols)
        if self.text is None:
            text = {a.name: self._render(a, cols[a.name]) for a in features}
        else:
            text = {name: np.asarray(self.text[name], dtype=object) for name in cols}
        object.__setattr__(self, "text", text)

    def _render(self, attr: AttributeSchema, col: np.ndarray) -> np.ndarray:
        if attr.kind == NUMERIC:
            integral = attr.name in self.integral
            return np.array([format_number(x, integral) for x in col], dtype=object)
        return np.array(col, dtype=object)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_columns(
        cls,
        pk_name: str,
        pk: Sequence,
        columns: Mapping[str, Sequence],
        kinds: Mapping[str, str] | None = None,
    ) -> "Dataset":
        """Build a dataset from in-memory columns (kinds inferred when absent)."""
        kinds = dict(kinds or {})
        schema = [AttributeSchema(pk_name, CATEGORICAL, PRIMARY_KEY)]
        cols, integral = {}, set()
        for name, values in columns.items():
            kind = kinds.get(name)
            arr = np.asarray(values)
            if kind is None:
                kind = NUMERIC if arr.dtype.kind in "iufb" else CATEGORICAL
            if kind == NUMERIC:
                arr = arr.astype(np.float64)
                finite = arr[~np.isnan(arr)]
                if np.all(np.mod(finite, 1) == 0):
                    integral.add(name)
            else:
                arr = np.array([MISSING_TOKEN if v is None else str(v) for v in values], dtype=object)
            schema.append(AttributeSchema(name, kind, FEATURE))
            cols[name] = arr
        return cls(tuple(schema), np.array([str(p) for p in pk], dtype=object), cols,
                   integral=frozenset(integral))

    # -- accessors ----------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.pk)

    @property
    def pk_name(self) -> str:
        return next(a.name for a in self.schema if a.role == PRIMARY_KEY)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.schema if a.role == FEATURE)

    @property
    def v(self) -> int:
        return len(self.feature_names)

    def attribute(self, name: str) -> AttributeSchema:
        for a in self.schema:
            if a.name == name:
                return a
        raise KeyError(name)

    def is_numeric(self, name: str) -> bool:
        return self.attribute(name).kind == NUMERIC

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def missing(self, name: str) -> np.ndarray:
        col = self.columns[name]
        if self.is_numeric(name):
            return np.isnan(col)
        return np.zeros(len(col), dtype=bool)

    def row_index(self) -> dict:
        return {p: i for i, p in enumerate(self.pk.tolist())}

    # -- derived copies -----------------------------------------------------
    def replace(self, name: str, rows: Iterable[int], values: Iterable) -> "Dataset":
        """Return a copy with ``name[rows] = values``; other cells keep their text."""
        rows = np.asarray(list(rows), dtype=np.int64)
        col = self.columns[name].copy()
        text = self.text[name].copy()
        if len(rows):
            if self.is_numeric(name):
                vals = np.asarray(list(values), dtype=np.float64)
                integral = name in self.integral
                col[rows] = vals
                text[rows] = [format_number(x, integral) for x in vals]
            else:
                vals = [str(x) for x in values]
                col[rows] = vals
                text[rows] = vals
        cols = dict(self.columns)
        cols[name] = col
        texts = dict(self.text)
        texts[name] = text
        return Dataset(self.schema, self.pk, cols, texts, self.integral)

    def take(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.schema,
            self.pk[rows],
            {k: c[rows] for k, c in self.columns.items()},
            {k: t[rows] for k, t in self.text.items()},
            self.integral,
        )

    def drop(self, names: Iterable[str]) -> "Dataset":
        names = set(names)
        if self.pk_name in names:
            raise SchemaMismatch("the primary key cannot be dropped")
        schema = tuple(a for a in self.schema if a.name not in names)
        return Dataset(
            schema,
            self.pk,
            {k: c for k, c in self.columns.items() if k not in names},
            {k: t for k, t in self.text.items() if k not in names},
            frozenset(self.integral - names),
        )

    def equals(self, other: "Dataset") -> bool:
        """Cell-level value equality, including row order and schema."""
        if self.schema != other.schema or not np.array_equal(self.pk, other.pk):
            return False
        for name in self.feature_names:
            a, b = self.columns[name], other.columns[name]
            if self.is_numeric(name):
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not np.array_equal(a, b):
                return False
        return True


def load_csv(path, pk_column: str, type_hints: Mapping[str, str] | None = None) -> Dataset:
    """Read a comma-separated file with a header row.

    Columns are numeric when every non-missing cell parses as a number, unless
    ``type_hints`` says otherwise.  Empty cells and ``"?"`` are missing.
    """
    type_hints = dict(type_hints or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    if pk_column not in header:
        raise SchemaMismatch(f"{path}: primary key column {pk_column!r} not found")
    if len(set(header)) != len(header):
        raise SchemaMismatch(f"{path}: duplicate column names")
    width = len(header)
    for lineno, r in enumerate(rows, start=2):
        if len(r) != width:
            raise SchemaMismatch(f"{path}:{lineno}: expected {width} cells, got {len(r)}")
    raw = {name: [r[j] for r in rows] for j, name in enumerate(header)}

    pk = raw[pk_column]
    seen = set()
    for p in pk:
        if p in seen:
            raise DuplicateKey(f"{path}: duplicate primary key {p!r}")
        seen.add(p)

    schema = []
    cols, text, integral = {}, {}, set()
    for name in header:
        if name == pk_column:
            schema.append(AttributeSchema(name, CATEGORICAL, PRIMARY_KEY))
            continue
        cells = raw[name]
        hint = type_hints.get(name)
        parsed = [None if c.strip() in MISSING_MARKERS else _parse_float(c) for c in cells]
        present = [c.strip() not in MISSING_MARKERS for c in cells]
        all_numbers = all(p is not None for p, ok in zip(parsed, present) if ok)
        if hint == NUMERIC:
            if not all_numbers:
                bad = next(c for p, c, ok in zip(parsed, cells, present) if ok and p is None)
                raise CellTypeError(f"{path}: column {name!r} has non-numeric cell {bad!r}")
            kind = NUMERIC
        elif hint == CATEGORICAL:
            kind = CATEGORICAL
        elif hint is not None:
            raise ValueError(f"unknown type hint {hint!r}")
        else:
            kind = NUMERIC if all_numbers and any(present) else CATEGORICAL
        if kind == NUMERIC:
            values = np.array([math.nan if p is None else p for p in parsed], dtype=np.float64)
            finite = values[~np.isnan(values)]
            if all(_looks_integral(c) for c, ok in zip(cells, present) if ok) and np.all(
                np.mod(finite, 1) == 0
            ):
                integral.add(name)
        else:
            values = np.array(
                [MISSING_TOKEN if c in MISSING_MARKERS else c for c in cells], dtype=object
            )
        schema.append(AttributeSchema(name, kind, FEATURE))
        cols[name] = values
        text[name] = np.array(cells, dtype=object)
    return Dataset(tuple(schema), np.array(pk, dtype=object), cols, text, frozenset(integral))


def _looks_integral(cell: str) -> bool:
    s = cell.strip().lstrip("+-")
    return s.isdigit()


def write_csv(data: Dataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = [a.name for a in data.schema]
    cols = [data.pk if name == data.pk_name else data.text[name] for name in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        writer.writerows(zip(*cols))


def check_aligned(a: Dataset, b: Dataset) -> np.ndarray:
    """Check schemas and PK sets agree; return the row permutation mapping a→b."""
    if a.feature_names != b.feature_names or any(
        a.attribute(n).kind != b.attribute(n).kind for n in a.feature_names
    ):
        raise SchemaMismatch("datasets have different schemas")
    if a.n != b.n:
        raise SchemaMismatch("datasets have different primary-key sets")
    if np.array_equal(a.pk, b.pk):
        return np.arange(a.n)
    index = b.row_index()
    try:
        return np.array([index[p] for p in a.pk.tolist()], dtype=np.int64)
    except KeyError as exc:
        raise SchemaMismatch(f"primary key {exc.args[0]!r} missing from second dataset") from None


def cell_changes(a: Dataset, b: Dataset) -> dict[str, np.ndarray]:
    """Per-attribute boolean masks (in ``a``'s row order) of differing cells."""
    perm = check_aligned(a, b)
    out = {}
    for name in a.feature_names:
        x, y = a.columns[name], b.columns[name][perm]
        if a.is_numeric(name):
            same = (x == y) | (np.isnan(x) & np.isnan(y))
        else:
            same = x == y
        out[name] = ~np.asarray(same, dtype=bool)
    return out


def diff_cells(a: Dataset, b: Dataset) -> int:
    """Number of feature cells whose values differ between two aligned datasets."""
    return int(sum(m.sum() for m in cell_changes(a, b).values()))
