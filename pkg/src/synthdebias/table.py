"""Schema-typed, column-major tables.

A :class:`Table` is immutable. Continuous columns hold ``float64`` values;
binary, ordinal and categorical columns hold ``int64`` level indices (binary
columns hold the values 0 and 1 directly). Every operation returns a new
table and shares column buffers where it can.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from synthdebias.errors import SchemaError


class Kind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"
    ORDINAL = "ordinal"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnKind:
    """Type of a column; ordinal and categorical kinds carry their level labels."""

    kind: Kind
    levels: tuple = ()

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        levels = tuple(str(lv) for lv in self.levels)
        if kind in (Kind.ORDINAL, Kind.CATEGORICAL):
            if not levels:
                raise SchemaError(f"{kind.value} column needs at least one level")
            if len(set(levels)) != len(levels):
                raise SchemaError(f"duplicate levels in {levels}")
        elif kind is Kind.BINARY:
            levels = ("0", "1")
        else:
            levels = ()
        object.__setattr__(self, "levels", levels)

    @classmethod
    def continuous(cls):
        return cls(Kind.CONTINUOUS)

    @classmethod
    def binary(cls):
        return cls(Kind.BINARY)

    @classmethod
    def ordinal(cls, levels):
        return cls(Kind.ORDINAL, tuple(levels))

    @classmethod
    def categorical(cls, levels):
        return cls(Kind.CATEGORICAL, tuple(levels))

    @property
    def is_discrete(self):
        return self.kind is not Kind.CONTINUOUS

    @property
    def is_numeric(self):
        """True for kinds whose values are meaningful numbers (continuous, binary)."""
        return self.kind in (Kind.CONTINUOUS, Kind.BINARY)

    @property
    def n_levels(self):
        return len(self.levels)

    def code_of(self, value):
        """Level index for a label, a code, or (binary) a 0/1 value."""
        if not self.is_discrete:
            raise SchemaError("continuous columns have no levels")
        if isinstance(value, (bool, np.bool_)):
            value = int(value)
        if isinstance(value, (int, np.integer)):
            code = int(value)
            if not 0 <= code < self.n_levels:
                raise SchemaError(f"level index {code} out of range for {self.levels}")
            return code
        label = str(value)
        try:
            return self.levels.index(label)
        except ValueError:
            raise SchemaError(f"unknown level {label!r}; expected one of {self.levels}") from None


@dataclass(frozen=True)
class Schema:
    """Ordered, uniquely named columns."""

    columns: tuple

    def __post_init__(self):
        cols = tuple((str(name), kind) for name, kind in self.columns)
        names = [name for name, _ in cols]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in {names}")
        for name, kind in cols:
            if not isinstance(kind, ColumnKind):
                raise SchemaError(f"column {name!r}: kind must be a ColumnKind")
        object.__setattr__(self, "columns", cols)

    @property
    def names(self):
        return [name for name, _ in self.columns]

    def __contains__(self, name):
        return any(n == name for n, _ in self.columns)

    def __len__(self):
        return len(self.columns)

    def kind(self, name):
        for n, k in self.columns:
            if n == name:
                return k
        raise SchemaError(f"unknown column {name!r}")

    def discrete_names(self):
        return [n for n, k in self.columns if k.is_discrete]

    def continuous_names(self):
        return [n for n, k in self.columns if not k.is_discrete]

    def with_kind(self, name, kind):
        self.kind(name)
        return Schema(tuple((n, kind if n == name else k) for n, k in self.columns))


class Table:
    """Immutable column-major table.

    Parameters
    ----------
    schema : Schema
    data : mapping of column name to 1-d array-like
        Discrete columns must already be level indices.
    """

    __slots__ = ("schema", "_data", "n_rows")

    def __init__(self, schema, data):
        if set(data) != set(schema.names):
            missing = set(schema.names) - set(data)
            extra = set(data) - set(schema.names)
            raise SchemaError(f"columns do not match schema (missing={missing}, extra={extra})")
        cols = {}
        n_rows = None
        for name, kind in schema.columns:
            arr = np.asarray(data[name])
            if arr.ndim != 1:
                raise SchemaError(f"column {name!r} must be one-dimensional")
            if n_rows is None:
                n_rows = arr.shape[0]
            elif arr.shape[0] != n_rows:
                raise SchemaError(f"column {name!r} has {arr.shape[0]} rows, expected {n_rows}")
            if kind.is_discrete:
                if arr.size and not np.issubdtype(arr.dtype, np.integer):
                    as_int = arr.astype(np.int64)
                    if not np.array_equal(as_int, arr):
                        raise SchemaError(f"column {name!r} must hold integer level indices")
                    arr = as_int
                arr = arr.astype(np.int64, copy=False)
                if arr.size and (arr.min() < 0 or arr.max() >= kind.n_levels):
                    raise SchemaError(f"column {name!r} has level indices outside 0..{kind.n_levels - 1}")
            else:
                arr = arr.astype(np.float64, copy=False)
                if arr.size and not np.all(np.isfinite(arr)):
                    raise SchemaError(f"column {name!r} contains missing or non-finite values")
            arr = arr.view()
            arr.setflags(write=False)
            cols[name] = arr
        self.schema = schema
        self._data = cols
        self.n_rows = 0 if n_rows is None else int(n_rows)

    @classmethod
    def empty(cls, schema):
        data = {
            name: np.empty(0, dtype=np.int64 if kind.is_discrete else np.float64)
            for name, kind in schema.columns
        }
        return cls(schema, data)

    def __len__(self):
        return self.n_rows

    def __repr__(self):
        return f"Table({self.n_rows} rows, columns={self.schema.names})"

    def __getitem__(self, name):
        return self.column(name)

    @property
    def names(self):
        return self.schema.names

    def column(self, name):
        try:
            return self._data[name]
        except KeyError:
            raise SchemaError(f"unknown column {name!r}") from None

    def to_dict(self):
        return dict(self._data)

    def take(self, index):
        """Rows selected by an integer index array or boolean mask."""
        return Table(self.schema, {n: c[index] for n, c in self._data.items()})

    def head(self, k):
        return self.take(slice(0, k))

    def with_column(self, name, values, kind=None):
        """Replace a column's values (and optionally its kind)."""
        schema = self.schema if kind is None else self.schema.with_kind(name, kind)
        data = dict(self._data)
        self.column(name)
        data[name] = values
        return Table(schema, data)

    def labels(self, name):
        """Column values as strings (level labels for discrete columns)."""
        kind = self.schema.kind(name)
        col = self.column(name)
        if kind.kind in (Kind.ORDINAL, Kind.CATEGORICAL):
            return np.asarray(kind.levels, dtype=object)[col]
        if kind.kind is Kind.BINARY:
            return col.astype(str)
        return np.array([format(v, ".17g") for v in col], dtype=object)

    def equals(self, other):
        if not isinstance(other, Table) or self.schema != other.schema:
            return False
        return all(np.array_equal(self._data[n], other._data[n]) for n in self.names)

    def __eq__(self, other):
        return self.equals(other)

    __hash__ = None


def concat(tables):
    """Row-bind tables sharing one schema."""
    tables = list(tables)
    if not tables:
        raise ValueError("nothing to concatenate")
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise SchemaError("cannot concatenate tables with different schemas")
    return Table(schema, {n: np.concatenate([t.column(n) for t in tables]) for n in schema.names})


def column_mean(table, column):
    """Arithmetic mean of a continuous or binary column."""
    kind = table.schema.kind(column)
    if not kind.is_numeric:
        raise SchemaError(f"column {column!r} is {kind.kind.value}; mean needs a numeric column")
    if table.n_rows == 0:
        raise ValueError("mean of an empty column")
    return float(np.mean(table.column(column)))


def split_by(table, column):
    """Partition rows by the levels of a discrete column.

    Returns a dict keyed by level label with one (possibly empty) table per
    declared level.
    """
    kind = table.schema.kind(column)
    if not kind.is_discrete:
        raise SchemaError(f"cannot split by continuous column {column!r}")
    codes = table.column(column)
    return {label: table.take(codes == i) for i, label in enumerate(kind.levels)}


def resolve_assignment(schema, assignment):
    """Map a {column: level} condition to {column: level index}, checking kinds."""
    out = {}
    for name, value in dict(assignment).items():
        kind = schema.kind(name)
        if not kind.is_discrete:
            raise SchemaError(f"conditioning on continuous column {name!r} is not supported")
        out[name] = kind.code_of(value)
    return out


def condition_mask(table, assignment):
    codes = resolve_assignment(table.schema, assignment)
    mask = np.ones(table.n_rows, dtype=bool)
    for name, code in codes.items():
        mask &= table.column(name) == code
    return mask


def filter_rows(table, assignment):
    """Rows meeting every equality condition in ``assignment``, order preserved."""
    return table.take(condition_mask(table, assignment))


def stratum_codes(table, columns):
    """Integer stratum id per row for the joint levels of discrete ``columns``.

    Returns
    -------
    codes : ndarray of int64
        Index into ``keys`` for every row.
    keys : list of tuple
        Level-index tuples of the strata present, in sorted order.
    """
    columns = list(columns)
    for c in columns:
        if not table.schema.kind(c).is_discrete:
            raise SchemaError(f"stratifying column {c!r} must be discrete")
    if not columns:
        return np.zeros(table.n_rows, dtype=np.int64), [()]
    mat = np.column_stack([table.column(c) for c in columns])
    if table.n_rows == 0:
        return np.zeros(0, dtype=np.int64), []
    keys, inverse = np.unique(mat, axis=0, return_inverse=True)
    return inverse.reshape(-1).astype(np.int64), [tuple(int(v) for v in row) for row in keys]


def key_labels(schema, columns, key):
    """Human-readable form of a stratum key."""
    return {c: schema.kind(c).levels[code] for c, code in zip(columns, key)}
