import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthdebias.errors import SchemaError
from synthdebias.io import dump_schema, load_schema, read_csv, schema_from_dict, schema_to_dict, write_csv
from synthdebias.table import ColumnKind, Schema, Table

SCHEMA = Schema(
    (
        ("x", ColumnKind.continuous()),
        ("stage", ColumnKind.ordinal(("I", "II", "III"))),
        ("g", ColumnKind.categorical(("red", "blue"))),
        ("arm", ColumnKind.binary()),
    )
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, st.integers(0, 2), st.integers(0, 1), st.integers(0, 1)), max_size=20))
def test_csv_round_trip_is_exact(tmp_path_factory, rows):
    cols = list(zip(*rows)) if rows else [[], [], [], []]
    t = Table(
        SCHEMA,
        {
            "x": np.array(cols[0], dtype=np.float64),
            "stage": np.array(cols[1], dtype=np.int64),
            "g": np.array(cols[2], dtype=np.int64),
            "arm": np.array(cols[3], dtype=np.int64),
        },
    )
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_csv(t, path)
    back = read_csv(path, SCHEMA)
    assert back == t
    assert np.array_equal(back.column("x").view(np.int64), t.column("x").view(np.int64))


def test_csv_writes_labels(tmp_path):
    t = Table(SCHEMA, {"x": np.array([0.1]), "stage": np.array([2]), "g": np.array([1]), "arm": np.array([1])})
    write_csv(t, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["x,stage,g,arm", "0.10000000000000001,III,blue,1"]


def test_csv_rejects_empty_cells(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,stage,g,arm\n1.0,I,red,0\n,II,blue,1\n")
    with pytest.raises(SchemaError, match=":3: empty cell"):
        read_csv(p, SCHEMA)


def test_csv_rejects_unknown_level_and_missing_column(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,stage,g,arm\n1.0,V,red,0\n")
    with pytest.raises(SchemaError, match="unknown level"):
        read_csv(p, SCHEMA)
    p.write_text("x,stage,arm\n1.0,I,0\n")
    with pytest.raises(SchemaError, match="missing columns"):
        read_csv(p, SCHEMA)


def test_binary_accepts_booleans(tmp_path):
    schema = Schema((("arm", ColumnKind.binary()),))
    p = tmp_path / "b.csv"
    p.write_text("arm\ntrue\nFalse\n1\n0.0\n")
    assert list(read_csv(p, schema).column("arm")) == [1, 0, 1, 0]
    p.write_text("arm\n2\n")
    with pytest.raises(SchemaError):
        read_csv(p, schema)


def test_schema_file_round_trip(tmp_path):
    dump_schema(SCHEMA, tmp_path / "s.yaml")
    assert load_schema(tmp_path / "s.yaml") == SCHEMA
    assert schema_from_dict(schema_to_dict(SCHEMA)) == SCHEMA


def test_schema_file_errors():
    with pytest.raises(SchemaError):
        schema_from_dict({"columns": [{"name": "s", "kind": "ordinal"}]})
    with pytest.raises(SchemaError):
        schema_from_dict({"columns": [{"name": "s", "kind": "text"}]})
    with pytest.raises(SchemaError):
        schema_from_dict([])
