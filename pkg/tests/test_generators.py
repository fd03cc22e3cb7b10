import warnings

import numpy as np
import pytest

from synthdebias.dgp import DgpParams, sample_dgp
from synthdebias.errors import ConditionTooRare, ConfigError, SchemaError, UnseenStratum
from synthdebias.generators import (
    GaussianCopula,
    GeneratorSpec,
    MeanShiftedGenerator,
    ParametricGenerator,
    PerArmShiftedGenerator,
    RegressionShiftedGenerator,
    SmoothedBootstrap,
    conditional_sample_rejection,
    fit_generator,
    parse_generator,
    sample_conditional,
)
from synthdebias.quality import count_exact_copies
from synthdebias.streams import make_rng
from synthdebias.table import ColumnKind, Schema, Table, filter_rows


@pytest.fixture(scope="module")
def train():
    return sample_dgp(20_000, DgpParams(), make_rng(21))


def test_parse_generator():
    assert parse_generator("parametric") == GeneratorSpec("parametric")
    assert parse_generator("copula").kind == "gaussian_copula"
    assert parse_generator("bootstrap:3:0.35") == GeneratorSpec("smoothed_bootstrap", 3.0, 0.35)
    assert parse_generator("bootstrap:0").bandwidth_rule == 0.0
    for bad in ("gan", "parametric:1", "bootstrap:x", "bootstrap:1:2:3", "bootstrap:-1"):
        with pytest.raises(ConfigError):
            parse_generator(bad)


def test_generators_reject_empty_training(train):
    empty = train.take(np.zeros(train.n_rows, bool))
    for kind in ("parametric", "smoothed_bootstrap", "gaussian_copula"):
        with pytest.raises(ValueError):
            fit_generator(GeneratorSpec(kind), empty, make_rng(0))


@pytest.mark.parametrize("kind", ["parametric", "smoothed_bootstrap", "gaussian_copula"])
def test_sampling_is_deterministic_and_typed(train, kind):
    gen = fit_generator(GeneratorSpec(kind), train.head(300), make_rng(1))
    a, b = gen.sample(100, make_rng(2)), gen.sample(100, make_rng(2))
    assert a == b and a.schema == train.schema and a.n_rows == 100
    assert gen.sample(0, make_rng(2)).n_rows == 0
    with pytest.raises(ValueError):
        gen.sample(-1, make_rng(2))


def test_parametric_recovers_dgp(train):
    gen = ParametricGenerator(train)
    s = gen.sample(200_000, make_rng(3))
    stage, therapy, bp = s.column("stage"), s.column("therapy"), s.column("bp")
    X = np.column_stack([np.ones(s.n_rows), therapy, *(stage == k for k in (1, 2, 3))]).astype(float)
    coef = np.linalg.lstsq(X, bp, rcond=None)[0]
    assert coef[1] == pytest.approx(-20, abs=0.5)
    assert np.allclose(coef[2:], [10, 20, 30], atol=1.0)
    assert s.column("age").mean() == pytest.approx(train.column("age").mean(), abs=0.1)
    assert np.mean(stage == 0) == pytest.approx(np.mean(train.column("stage") == 0), abs=0.01)
    ordinal = gen.model("stage")
    assert ordinal.beta[0] > 0  # P(stage <= k) falls with age


def test_parametric_conditional_matches_rejection(train):
    gen = ParametricGenerator(train.head(2000))
    cond = {"stage": "III"}
    direct = gen.conditional_sample(cond, 40_000, make_rng(4))
    reject = conditional_sample_rejection(gen, cond, 40_000, make_rng(5))
    assert np.all(direct.column("stage") == 2)
    for col in ("age", "bp", "therapy"):
        d, r = direct.column(col), reject.column(col)
        se = np.sqrt(d.var() / d.size + r.var() / r.size)
        assert abs(d.mean() - r.mean()) < 5 * se


def test_parametric_prefix_condition_keeps_all_rows(train):
    schema = Schema((("g", ColumnKind.binary()), ("y", ColumnKind.continuous())))
    rng = make_rng(6)
    g = (rng.random(500) < 0.01).astype(np.int64)
    g[:5] = 1
    t = Table(schema, {"g": g, "y": rng.normal(size=500) + 3 * g})
    gen = ParametricGenerator(t)
    out = gen.conditional_sample({"g": 1}, 1000, make_rng(7), batch=1000, max_draws=1000)
    assert out.n_rows == 1000 and out.column("y").mean() == pytest.approx(3, abs=0.5)


def test_rejection_too_rare(train):
    gen = SmoothedBootstrap(train.head(300), make_rng(8))
    only_i = filter_rows(train.head(300), {"stage": "I"})
    gen_i = SmoothedBootstrap(only_i, make_rng(8))
    with pytest.raises(ConditionTooRare) as info:
        sample_conditional(gen_i, {"stage": "IV"}, 10, make_rng(9))
    assert info.value.found == 0
    out = sample_conditional(gen, {"stage": "II", "therapy": 1}, 50, make_rng(9))
    assert out.n_rows == 50 and np.all(out.column("stage") == 1) and np.all(out.column("therapy") == 1)
    with pytest.raises(SchemaError):
        sample_conditional(gen, {"age": 50.0}, 10, make_rng(9))


def test_bootstrap_bandwidth_and_special_cases(train):
    small = train.head(400)
    gen = SmoothedBootstrap(small, make_rng(10), bandwidth_rule=3.0, fit_noise=0.0)
    expected = 3.0 * 1.06 * np.std(small.column("age"), ddof=1) * 400 ** (-0.2)
    assert gen.bandwidths["age"] == pytest.approx(expected, rel=1e-12)
    s = gen.sample(400_000, make_rng(11))
    assert s.column("age").mean() == pytest.approx(small.column("age").mean(), abs=5 * 12 / np.sqrt(4e5))
    plain = SmoothedBootstrap(small, make_rng(10), bandwidth_rule=0.0, fit_noise=0.35)
    assert count_exact_copies(small, plain.sample(300, make_rng(12))) == 300


def test_bootstrap_fit_noise_biases_the_generator(train):
    small = train.head(500)
    offsets = []
    for seed in range(40):
        gen = SmoothedBootstrap(small, make_rng(seed), 3.0, 0.35)
        w = gen.row_weights()
        offsets.append(np.sum(w * gen.anchor_values("age")) - small.column("age").mean())
    # the per-fit mean offset is random with spread well above the root-n scale
    assert np.std(offsets) > 0.5 * 10 / np.sqrt(500)


def test_copula_preserves_marginals(train):
    gen = GaussianCopula(train.head(3000))
    s = gen.sample(100_000, make_rng(13))
    t = train.head(3000)
    assert s.column("age").mean() == pytest.approx(t.column("age").mean(), abs=0.3)
    for k in range(4):
        assert np.mean(s.column("stage") == k) == pytest.approx(np.mean(t.column("stage") == k), abs=0.01)
    assert s.column("age").min() >= t.column("age").min() and s.column("age").max() <= t.column("age").max()
    assert np.corrcoef(s.column("stage"), s.column("bp"))[0, 1] > 0.2


def test_copula_degenerate_column_warns():
    schema = Schema((("x", ColumnKind.continuous()), ("c", ColumnKind.binary())))
    t = Table(schema, {"x": np.arange(10.0), "c": np.zeros(10, np.int64)})
    with pytest.warns(UserWarning, match="without variation"):
        gen = GaussianCopula(t)
    assert np.all(gen.sample(50, make_rng(1)).column("c") == 0)


def test_mean_shift_wrapper(train):
    base = ParametricGenerator(train.head(500))
    w = MeanShiftedGenerator(base, "therapy", 0.25)
    assert w.schema.kind("therapy").kind.value == "continuous"
    a, b = base.sample(100, make_rng(14)), w.sample(100, make_rng(14))
    assert np.allclose(b.column("therapy"), a.column("therapy") + 0.25)
    assert np.array_equal(a.column("age"), b.column("age"))
    with pytest.raises(SchemaError):
        MeanShiftedGenerator(base, "stage", 1.0)


def test_per_arm_shift_wrapper(train):
    base = SmoothedBootstrap(train.head(500), make_rng(1))
    w = PerArmShiftedGenerator(base, "bp", "therapy", {0: 1.0, 1: -2.0})
    a, b = base.sample(200, make_rng(15)), w.sample(200, make_rng(15))
    arm = a.column("therapy")
    assert np.allclose(b.column("bp") - a.column("bp"), np.where(arm == 1, -2.0, 1.0))
    assert np.array_equal(b.column("therapy"), arm)


def test_regression_shift_wrapper(train):
    base = ParametricGenerator(train.head(500))
    means = {(0,): 0.4, (1,): 0.5, (2,): 0.6}
    w = RegressionShiftedGenerator(base, "bp", "therapy", ("stage",), 2.0, means, 0.5, strict=True)
    a = base.sample(5000, make_rng(16))
    with pytest.raises(UnseenStratum):
        w.sample(5000, make_rng(16))
    lenient = RegressionShiftedGenerator(base, "bp", "therapy", ("stage",), 2.0, means, 0.5, strict=False)
    b = lenient.sample(5000, make_rng(16))
    lookup = np.array([0.4, 0.5, 0.6, 0.5])
    expect = a.column("bp") + 2.0 * (a.column("therapy") - lookup[a.column("stage")])
    assert np.allclose(b.column("bp"), expect)
    assert lenient.count_unseen(a) == int(np.sum(a.column("stage") == 3))
