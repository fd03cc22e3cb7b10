import numpy as np
import pytest

from synthdebias.errors import SchemaError
from synthdebias.generators import MeanShiftedGenerator, ParametricGenerator, SmoothedBootstrap
from synthdebias.quality import column_kl, count_exact_copies, ikld, quality_report
from synthdebias.streams import make_rng
from synthdebias.table import ColumnKind, Schema, Table

S = Schema((("x", ColumnKind.continuous()), ("g", ColumnKind.categorical(("a", "b")))))


def test_identical_tables_score_one(dgp500):
    assert ikld(dgp500, dgp500) == 1.0
    assert count_exact_copies(dgp500, dgp500) == dgp500.n_rows


def test_disjoint_support_closed_form():
    n = 1000
    orig = Table(S, {"x": np.zeros(n), "g": np.zeros(n, np.int64)})
    synth = Table(S, {"x": np.ones(n), "g": np.zeros(n, np.int64)})
    # two occupied bins (first and last of 10), add-one smoothing
    p = np.full(10, 1.0)
    p[0] += n
    q = np.full(10, 1.0)
    q[-1] += n
    p, q = p / p.sum(), q / q.sum()
    kl_x = np.sum(p * np.log(p / q))
    assert column_kl(orig, synth, "x") == pytest.approx(kl_x, rel=1e-12)
    assert ikld(orig, synth) == pytest.approx(1 / (1 + kl_x / 2), rel=1e-12)
    assert ikld(orig, synth) < 0.4


def test_marginal_only_metric():
    g = np.array([0, 1] * 50)
    x = g.astype(float)
    orig = Table(S, {"x": x, "g": g})
    swapped = Table(S, {"x": x, "g": 1 - g})
    assert ikld(orig, swapped) == 1.0


def test_schema_mismatch():
    other = Schema((("x", ColumnKind.continuous()),))
    t = Table(S, {"x": np.zeros(3), "g": np.zeros(3, np.int64)})
    with pytest.raises(SchemaError):
        ikld(t, Table(other, {"x": np.zeros(3)}))


def test_relaxed_binary_column_accepted(dgp500):
    gen = MeanShiftedGenerator(ParametricGenerator(dgp500), "therapy", 0.1)
    rep = quality_report(dgp500, gen.sample(500, make_rng(1)))
    assert 0 < rep.ikld <= 1 and rep.exact_copies == 0


def test_copies_by_generator(dgp500):
    assert count_exact_copies(dgp500, ParametricGenerator(dgp500).sample(500, make_rng(2))) == 0
    plain = SmoothedBootstrap(dgp500, make_rng(3), bandwidth_rule=0.0)
    assert count_exact_copies(dgp500, plain.sample(700, make_rng(4))) == 700


def test_wider_bandwidth_does_not_score_higher(dgp500):
    narrow = SmoothedBootstrap(dgp500, make_rng(5), bandwidth_rule=1.0, fit_noise=0.0).sample(2000, make_rng(6))
    wide = SmoothedBootstrap(dgp500, make_rng(5), bandwidth_rule=10.0, fit_noise=0.0).sample(2000, make_rng(6))
    assert ikld(dgp500, wide) <= ikld(dgp500, narrow)
