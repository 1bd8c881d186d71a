"""Tabular data model: schema, columnar datasets, fragments and fragmentations.

Categorical attributes are ordinal-encoded at ingest (first-appearance order)
and treated as numeric afterwards. The class attribute is kept as string labels
so that class values have a stable lexicographic order for tie-breaking.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

KINDS = ("numeric", "categorical")
ROLES = ("feature", "class", "sensitive")


class SchemaError(ValueError):
    pass


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str = "numeric"
    role: str = "feature"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise SchemaError(f"attribute {self.name!r}: unknown role {self.role!r}")


def validate_schema(schema: Sequence[AttributeSchema]) -> None:
    names = [a.name for a in schema]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise SchemaError(f"duplicate attribute names: {dup}")
    n_class = sum(a.role == "class" for a in schema)
    if n_class != 1:
        raise SchemaError(f"exactly one class attribute required, found {n_class}")


def parse_schema(text: str) -> list[AttributeSchema]:
    """Parse ``name=kind,role`` lines. Blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, rest = line.partition("=")
        parts = [p.strip() for p in rest.split(",")]
        if not sep or len(parts) != 2 or not name.strip():
            raise SchemaError(f"schema line {lineno}: expected '<name>=<kind>,<role>', got {raw!r}")
        out.append(AttributeSchema(name.strip(), parts[0], parts[1]))
    validate_schema(out)
    return out


def load_schema(path: str | Path) -> list[AttributeSchema]:
    return parse_schema(Path(path).read_text(encoding="utf-8"))


def format_schema(schema: Sequence[AttributeSchema]) -> str:
    return "".join(f"{a.name}={a.kind},{a.role}\n" for a in schema)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable columnar table.

    ``origin`` maps each column to the attribute index it came from in the
    source table, and ``row_ids`` carries source row identity through
    projections and row subsets.
    """

    schema: tuple[AttributeSchema, ...]
    columns: tuple[np.ndarray, ...]
    categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    row_ids: np.ndarray | None = None
    origin: tuple[int, ...] | None = None

    def __post_init__(self):
        schema = tuple(self.schema)
        validate_schema(schema)
        if len(self.columns) != len(schema):
            raise SchemaError(f"{len(self.columns)} columns for {len(schema)} attributes")
        cols = []
        for attr, col in zip(schema, self.columns):
            if attr.role == "class":
                cols.append(_readonly(np.asarray(col, dtype=str)))
            else:
                cols.append(_readonly(np.asarray(col, dtype=float)))
        lengths = {len(c) for c in cols}
        if len(lengths) > 1:
            raise SchemaError(f"columns have unequal lengths {sorted(lengths)}")
        n = lengths.pop() if lengths else 0
        rows = np.arange(n) if self.row_ids is None else np.asarray(self.row_ids, dtype=int)
        if len(rows) != n:
            raise SchemaError("row_ids length does not match row count")
        origin = tuple(range(len(schema))) if self.origin is None else tuple(self.origin)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "columns", tuple(cols))
        object.__setattr__(self, "row_ids", _readonly(rows))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "categories", dict(self.categories))

    @property
    def row_count(self) -> int:
        return len(self.row_ids)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.schema]

    @property
    def class_index(self) -> int:
        return next(i for i, a in enumerate(self.schema) if a.role == "class")

    @property
    def feature_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.schema) if a.role == "feature"]

    @property
    def labels(self) -> np.ndarray:
        return self.columns[self.class_index]

    def column(self, name_or_index: str | int) -> np.ndarray:
        if isinstance(name_or_index, str):
            return self.columns[self.names.index(name_or_index)]
        return self.columns[name_or_index]

    def features(self) -> np.ndarray:
        """Feature columns stacked into a (rows, features) float matrix."""
        idx = self.feature_indices
        if not idx:
            return np.empty((self.row_count, 0))
        return np.column_stack([self.columns[i] for i in idx])

    def feature_origin(self) -> tuple[int, ...]:
        return tuple(self.origin[i] for i in self.feature_indices)

    def take(self, rows: Iterable[int]) -> "Dataset":
        """Subset of rows by position, keeping source row ids."""
        rows = np.asarray(list(rows) if not isinstance(rows, np.ndarray) else rows, dtype=int)
        return Dataset(
            self.schema,
            tuple(c[rows] for c in self.columns),
            self.categories,
            self.row_ids[rows],
            self.origin,
        )

    def select(self, indices: Sequence[int]) -> "Dataset":
        """Keep the given columns (by position in this dataset) in the given order."""
        for i in indices:
            if not 0 <= i < len(self.schema):
                raise IndexError(f"attribute index {i} out of range")
        return Dataset(
            tuple(self.schema[i] for i in indices),
            tuple(self.columns[i] for i in indices),
            {self.schema[i].name: self.categories[self.schema[i].name]
             for i in indices if self.schema[i].name in self.categories},
            self.row_ids,
            tuple(self.origin[i] for i in indices),
        )


def _parse_number(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN")
    return v


def read_csv_text(lines: Iterable[str], schema: Sequence[AttributeSchema], source: str = "<input>") -> Dataset:
    validate_schema(schema)
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError(f"{source}: empty file") from None
    header = [h.strip() for h in header]
    expected = [a.name for a in schema]
    if header != expected:
        raise SchemaError(f"{source}: header {header} does not match schema {expected}")

    raw: list[list[str]] = [[] for _ in schema]
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(schema):
            raise DataFormatError(f"{source}: row {rowno} has {len(row)} fields, expected {len(schema)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise DataFormatError(f"{source}: row {rowno}, column {expected[j]!r}: missing value")
            raw[j].append(cell)
    if not raw[0]:
        raise DataFormatError(f"{source}: no data rows")

    columns = []
    categories: dict[str, tuple[str, ...]] = {}
    for j, attr in enumerate(schema):
        cells = raw[j]
        if attr.role == "class":
            columns.append(np.array(cells, dtype=str))
        elif attr.kind == "categorical":
            codes: dict[str, int] = {}
            for c in cells:
                codes.setdefault(c, len(codes))
            columns.append(np.array([codes[c] for c in cells], dtype=float))
            categories[attr.name] = tuple(codes)
        else:
            vals = []
            for i, c in enumerate(cells):
                try:
                    vals.append(_parse_number(c))
                except ValueError:
                    raise DataFormatError(
                        f"{source}: row {i + 2}, column {attr.name!r}: cannot parse {c!r} as a number"
                    ) from None
            columns.append(np.array(vals, dtype=float))
    return Dataset(tuple(schema), tuple(columns), categories)


def load_csv(path: str | Path, schema: Sequence[AttributeSchema]) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return read_csv_text(fh, schema, source=str(path))


def format_number(v: float) -> str:
    v = float(v)
    if v.is_integer():
        return str(int(v))
    return repr(v)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset.names)
        cols = []
        for attr, col in zip(dataset.schema, dataset.columns):
            if attr.role == "class":
                cols.append(list(col))
            elif attr.name in dataset.categories:
                labels = dataset.categories[attr.name]
                cols.append([labels[int(v)] for v in col])
            else:
                cols.append([format_number(v) for v in col])
        for row in zip(*cols):
            w.writerow(row)


@dataclass(frozen=True)
class Fragment:
    """Disjoint group of feature attributes; the class attribute is implied."""

    feature_indices: tuple[int, ...]
    includes_class: bool = True

    def __post_init__(self):
        idx = tuple(int(i) for i in self.feature_indices)
        if not idx:
            raise ValueError("fragment must contain at least one feature")
        if len(set(idx)) != len(idx):
            raise ValueError(f"fragment has repeated attributes: {idx}")
        object.__setattr__(self, "feature_indices", idx)

    def __len__(self):
        return len(self.feature_indices)


@dataclass(frozen=True)
class Fragmentation:
    fragments: tuple[Fragment, ...]

    def __post_init__(self):
        frags = tuple(f if isinstance(f, Fragment) else Fragment(tuple(f)) for f in self.fragments)
        seen: set[int] = set()
        for f in frags:
            overlap = seen.intersection(f.feature_indices)
            if overlap:
                raise ValueError(f"fragments overlap on attributes {sorted(overlap)}")
            seen.update(f.feature_indices)
        object.__setattr__(self, "fragments", frags)

    def __len__(self):
        return len(self.fragments)

    def __iter__(self):
        return iter(self.fragments)

    @property
    def attributes(self) -> set[int]:
        return {i for f in self.fragments for i in f.feature_indices}

    def covers(self, features: Iterable[int]) -> bool:
        return self.attributes == set(features)

    def check_cover(self, features: Iterable[int]) -> None:
        features = set(features)
        missing = features - self.attributes
        extra = self.attributes - features
        if missing or extra:
            raise ValueError(f"fragmentation does not cover features: missing {sorted(missing)}, extra {sorted(extra)}")

    def assign(self, attr: int, target: int) -> "Fragmentation":
        frags = list(self.fragments)
        frags[target] = Fragment(frags[target].feature_indices + (attr,))
        return Fragmentation(tuple(frags))


def project(dataset: Dataset, fragment: Fragment) -> Dataset:
    """Feature columns of ``fragment`` plus the class column, rows unchanged.

    Fragment indices are source attribute ids (``dataset.origin``), which are
    plain column positions for a freshly loaded table.
    """
    pos = {o: i for i, o in enumerate(dataset.origin)}
    cls = dataset.class_index
    cols = []
    for a in fragment.feature_indices:
        if a not in pos:
            raise IndexError(f"attribute index {a} out of range for this dataset")
        if pos[a] == cls:
            raise ValueError("the class attribute cannot be part of a fragment")
        cols.append(pos[a])
    return dataset.select(cols + [cls])


def attribute_ranges(dataset: Dataset) -> dict[int, tuple[float, float]]:
    """(min, max) per feature attribute, keyed by source attribute index."""
    out = {}
    for i in dataset.feature_indices:
        col = dataset.columns[i]
        out[dataset.origin[i]] = (float(col.min()), float(col.max()))
    return out
