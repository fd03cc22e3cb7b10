import numpy as np
import pytest

from synthdebias.dgp import DgpParams, sample_dgp
from synthdebias.streams import make_rng
from synthdebias.table import ColumnKind, Schema, Table


@pytest.fixture(scope="session")
def dgp500():
    return sample_dgp(500, DgpParams(), make_rng(7))


@pytest.fixture
def small_schema():
    return Schema(
        (
            ("x", ColumnKind.continuous()),
            ("g", ColumnKind.categorical(("a", "b", "c"))),
            ("arm", ColumnKind.binary()),
        )
    )


def make_table(schema, **cols):
    return Table(schema, {k: np.asarray(v) for k, v in cols.items()})


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
