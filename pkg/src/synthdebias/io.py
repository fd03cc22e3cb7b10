"""CSV tables and YAML schema files.

Schema file layout::

    columns:
      - name: age
        kind: continuous
      - name: stage
        kind: ordinal
        levels: [I, II, III, IV]
      - name: therapy
        kind: binary

Tables are written with a header row. Discrete columns are written as level
labels (binary as ``0``/``1``), continuous values with 17 significant digits
so that reading a written file reproduces every float exactly.
"""

import csv
from pathlib import Path

import numpy as np
import yaml

from synthdebias.errors import SchemaError
from synthdebias.table import ColumnKind, Kind, Schema, Table


def schema_to_dict(schema):
    cols = []
    for name, kind in schema.columns:
        entry = {"name": name, "kind": kind.kind.value}
        if kind.kind in (Kind.ORDINAL, Kind.CATEGORICAL):
            entry["levels"] = list(kind.levels)
        cols.append(entry)
    return {"columns": cols}


def schema_from_dict(obj):
    if not isinstance(obj, dict) or not isinstance(obj.get("columns"), list):
        raise SchemaError("schema must be a mapping with a 'columns' list")
    cols = []
    for i, entry in enumerate(obj["columns"]):
        if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
            raise SchemaError(f"columns[{i}]: needs 'name' and 'kind'")
        try:
            kind = Kind(str(entry["kind"]).lower())
        except ValueError:
            raise SchemaError(f"columns[{i}]: unknown kind {entry['kind']!r}") from None
        levels = entry.get("levels", ())
        if kind in (Kind.ORDINAL, Kind.CATEGORICAL) and not levels:
            raise SchemaError(f"columns[{i}] ({entry['name']}): {kind.value} needs 'levels'")
        cols.append((str(entry["name"]), ColumnKind(kind, tuple(levels or ()))))
    return Schema(tuple(cols))


def load_schema(path):
    with open(path) as fh:
        try:
            obj = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    return schema_from_dict(obj)


def dump_schema(schema, path=None):
    text = yaml.safe_dump(schema_to_dict(schema), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text


def _format_float(x):
    return format(float(x), ".17g")


def write_csv(table, path):
    schema = table.schema
    formatted = []
    for name, kind in schema.columns:
        col = table.column(name)
        if kind.kind in (Kind.ORDINAL, Kind.CATEGORICAL):
            formatted.append(np.asarray(kind.levels, dtype=object)[col])
        elif kind.kind is Kind.BINARY:
            formatted.append(col.astype(str))
        else:
            formatted.append([_format_float(v) for v in col])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(schema.names)
        writer.writerows(zip(*formatted))


def read_csv(path, schema):
    """Parse a CSV under ``schema``; the header must contain every schema column."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    missing = [n for n in schema.names if n not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    pos = {n: header.index(n) for n in schema.names}
    data = {}
    for name, kind in schema.columns:
        j = pos[name]
        raw = []
        for lineno, row in enumerate(rows, start=2):
            if j >= len(row) or row[j].strip() == "":
                raise SchemaError(f"{path}:{lineno}: empty cell in column {name!r}")
            raw.append(row[j].strip())
        if kind.kind is Kind.CONTINUOUS:
            try:
                data[name] = np.array([float(v) for v in raw], dtype=np.float64)
            except ValueError as exc:
                raise SchemaError(f"{path}: column {name!r}: {exc}") from None
        elif kind.kind is Kind.BINARY:
            vals = []
            for v in raw:
                if v in ("0", "1"):
                    vals.append(int(v))
                elif v.lower() in ("true", "false"):
                    vals.append(int(v.lower() == "true"))
                else:
                    try:
                        f = float(v)
                    except ValueError:
                        f = None
                    if f not in (0.0, 1.0):
                        raise SchemaError(f"{path}: binary column {name!r} has value {v!r}")
                    vals.append(int(f))
            data[name] = np.array(vals, dtype=np.int64)
        else:
            index = {lv: i for i, lv in enumerate(kind.levels)}
            try:
                data[name] = np.array([index[v] for v in raw], dtype=np.int64)
            except KeyError as exc:
                raise SchemaError(f"{path}: column {name!r} has unknown level {exc.args[0]!r}") from None
    return Table(schema, data)
