"""Typed tabular data for the CI engine.

A Dataset holds dense columns, one per named variable: continuous columns as
float64, categorical columns as small nonnegative integer level codes. The
on-disk form is a CSV of values plus a sidecar schema file declaring each
variable's kind (`name=continuous`, `name=binary`, `name=multinomial:K`).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"
MULTINOMIAL = "multinomial"


class SchemaError(ValueError):
    """Raised for malformed schema files or schema/data mismatches."""


@dataclass(frozen=True)
class VarKind:
    kind: str
    levels: int = 0

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY, MULTINOMIAL):
            raise SchemaError("unknown variable kind %r" % (self.kind,))
        if self.kind == MULTINOMIAL and self.levels < 3:
            raise SchemaError("multinomial needs >= 3 levels, got %d" % self.levels)
        if self.kind == BINARY:
            object.__setattr__(self, "levels", 2)
        if self.kind == CONTINUOUS:
            object.__setattr__(self, "levels", 0)

    @property
    def categorical(self) -> bool:
        return self.kind != CONTINUOUS

    @property
    def width(self) -> int:
        """Number of design-matrix columns this variable occupies as a
        predictor (one-hot with the first level dropped)."""
        return self.levels - 1 if self.categorical else 1

    def __str__(self):
        if self.kind == MULTINOMIAL:
            return "multinomial:%d" % self.levels
        return self.kind


def parse_kind(text: str) -> VarKind:
    text = text.strip()
    if text == CONTINUOUS:
        return VarKind(CONTINUOUS)
    if text == BINARY:
        return VarKind(BINARY)
    if text.startswith(MULTINOMIAL + ":"):
        try:
            levels = int(text.split(":", 1)[1])
        except ValueError:
            raise SchemaError("bad multinomial level count in %r" % text) from None
        return VarKind(MULTINOMIAL, levels)
    raise SchemaError("unknown variable kind %r" % text)


class Dataset:
    """Immutable columnar dataset with a typed schema."""

    def __init__(self, names, kinds, columns):
        self.names = tuple(names)
        self.kinds = tuple(kinds)
        if len(self.names) != len(set(self.names)):
            raise SchemaError("duplicate variable names")
        if len(self.kinds) != len(self.names) or len(columns) != len(self.names):
            raise SchemaError("schema and column counts disagree")
        self._index = {n: i for i, n in enumerate(self.names)}
        cols = []
        n = None
        for name, kind, col in zip(self.names, self.kinds, columns):
            arr = np.asarray(col)
            if arr.ndim != 1:
                raise SchemaError("column %r is not 1-dimensional" % name)
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise SchemaError("column %r has %d rows, expected %d" % (name, arr.shape[0], n))
            if np.any(~np.isfinite(arr.astype(np.float64))):
                raise SchemaError("column %r contains missing or non-finite values" % name)
            if kind.categorical:
                codes = arr.astype(np.int64)
                if np.any(codes != arr.astype(np.float64)):
                    raise SchemaError("column %r has non-integer level codes" % name)
                if codes.size and (codes.min() < 0 or codes.max() >= kind.levels):
                    raise SchemaError(
                        "column %r codes outside 0..%d" % (name, kind.levels - 1)
                    )
                cols.append(codes)
            else:
                cols.append(arr.astype(np.float64))
        if n is None or n < 1:
            raise SchemaError("dataset needs at least one row")
        self.n = n
        self.columns = tuple(cols)

    @property
    def p(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self._index[name]

    def column(self, i: int) -> np.ndarray:
        return self.columns[i]

    def kind(self, i: int) -> VarKind:
        return self.kinds[i]

    def encoded(self, i: int) -> np.ndarray:
        """Design-matrix block for variable i as a predictor: the raw column
        for continuous variables, one-hot columns dropping level 0 for
        categorical ones. Shape (n, width)."""
        kind = self.kinds[i]
        col = self.columns[i]
        if not kind.categorical:
            return col.reshape(-1, 1)
        out = np.zeros((self.n, kind.levels - 1))
        for lvl in range(1, kind.levels):
            out[:, lvl - 1] = col == lvl
        return out


def parse_schema(text: str) -> list[tuple[str, VarKind]]:
    """Parse `name=kind` lines; blank lines and `#` comments ignored."""
    out = []
    seen = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError("bad schema line %r (expected name=kind)" % line)
        name, kind_text = line.split("=", 1)
        name = name.strip()
        if not name:
            raise SchemaError("empty variable name in schema line %r" % line)
        if name in seen:
            raise SchemaError("duplicate schema entry for %r" % name)
        seen.add(name)
        out.append((name, parse_kind(kind_text)))
    if not out:
        raise SchemaError("schema file declares no variables")
    return out


def format_schema(names, kinds) -> str:
    return "".join("%s=%s\n" % (n, k) for n, k in zip(names, kinds))


def load_csv(csv_text: str, schema: list[tuple[str, VarKind]]) -> Dataset:
    """Build a Dataset from CSV text (header row of names) and a parsed
    schema. Column order follows the CSV header; every header name must be
    declared in the schema and vice versa."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty CSV") from None
    header = [h.strip() for h in header]
    declared = dict(schema)
    missing = [h for h in header if h not in declared]
    if missing:
        raise SchemaError("CSV columns not in schema: %s" % ", ".join(missing))
    extra = [n for n, _ in schema if n not in header]
    if extra:
        raise SchemaError("schema variables not in CSV: %s" % ", ".join(extra))
    rows = [row for row in reader if row]
    if not rows:
        raise SchemaError("CSV has a header but no data rows")
    width = len(header)
    for idx, row in enumerate(rows):
        if len(row) != width:
            raise SchemaError("row %d has %d fields, expected %d" % (idx + 2, len(row), width))
    try:
        values = np.array(rows, dtype=np.float64)
    except ValueError:
        raise SchemaError("non-numeric cell in CSV body") from None
    kinds = [declared[h] for h in header]
    return Dataset(header, kinds, [values[:, j] for j in range(width)])


def load_files(csv_path: str, schema_path: str) -> Dataset:
    with open(schema_path, "r", encoding="utf-8") as fh:
        schema = parse_schema(fh.read())
    with open(csv_path, "r", encoding="utf-8") as fh:
        return load_csv(fh.read(), schema)


def save_files(d: Dataset, csv_path: str, schema_path: str):
    """Write a dataset back out in the ingestion format, deterministically.

    Continuous values are rendered with repr-style shortest float text so a
    reload is bit-exact; categorical values as bare integers.
    """
    with open(schema_path, "w", encoding="utf-8") as fh:
        fh.write(format_schema(d.names, d.kinds))
    lines = [",".join(d.names)]
    formatted = []
    for i, kind in enumerate(d.kinds):
        col = d.columns[i]
        if kind.categorical:
            formatted.append([str(int(v)) for v in col])
        else:
            formatted.append([repr(float(v)) for v in col])
    for row in range(d.n):
        lines.append(",".join(formatted[j][row] for j in range(d.p)))
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
