import numpy as np
import pytest
import statsmodels.api as sm
from hypothesis import given, settings
from hypothesis import strategies as st

from synthdebias.errors import ConfigError, DegenerateExposure, EmptyArm, SchemaError, StratumUnestimable
from synthdebias.estimators import (
    LinCoef,
    Mean,
    RiskDifference,
    bias_term_synthetic_plugin,
    check_estimand,
    estimate,
    estimate_lincoef,
    estimate_mean,
    estimate_risk_difference,
    fit_nuisance,
    parse_estimand,
)
from synthdebias.streams import make_rng
from synthdebias.table import ColumnKind, Schema, Table

SCHEMA = Schema(
    (
        ("y", ColumnKind.continuous()),
        ("a", ColumnKind.continuous()),
        ("x", ColumnKind.categorical(("p", "q", "r", "s"))),
        ("arm", ColumnKind.binary()),
    )
)


def table(y, a, x, arm=None):
    n = len(y)
    arm = np.zeros(n, dtype=np.int64) if arm is None else np.asarray(arm)
    return Table(SCHEMA, {"y": np.asarray(y, float), "a": np.asarray(a, float), "x": np.asarray(x), "arm": arm})


def ols_with_dummies(y, a, x):
    levels = np.unique(x)
    X = np.column_stack([a] + [(x == lv).astype(float) for lv in levels])
    return np.linalg.lstsq(X, y, rcond=None)[0][0]


def test_parse_estimand():
    assert parse_estimand("mean:age") == Mean("age")
    assert parse_estimand("lincoef:bp~therapy|stage") == LinCoef("bp", "therapy", ("stage",))
    assert parse_estimand("lincoef: y ~ a | x1, x2") == LinCoef("y", "a", ("x1", "x2"))
    assert parse_estimand("lincoef:y~a") == LinCoef("y", "a", ())
    assert parse_estimand("rd:death~aspirin") == RiskDifference("death", "aspirin")
    for bad in ("mean", "median:x", "lincoef:y", "rd:y~a|x"):
        with pytest.raises(ConfigError):
            parse_estimand(bad)
    for text in ("mean:age", "lincoef:bp~therapy|stage", "rd:death~aspirin"):
        assert str(parse_estimand(text)) == text


def test_check_estimand():
    check_estimand(SCHEMA, LinCoef("y", "a", ("x",)))
    with pytest.raises(SchemaError):
        check_estimand(SCHEMA, LinCoef("y", "a", ("y",)))
    with pytest.raises(SchemaError):
        check_estimand(SCHEMA, Mean("x"))
    with pytest.raises(SchemaError):
        check_estimand(SCHEMA, RiskDifference("y", "a"))


def test_mean_eic():
    fit = estimate_mean(table([1, 2, 3], [0, 0, 0], [0, 0, 0]), "y")
    assert fit.theta == 2.0
    assert np.allclose(fit.eic_values, [-1, 0, 1])
    assert bias_term_synthetic_plugin(fit) == 0.0


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(8, 200), k=st.integers(1, 4))
def test_lincoef_equals_ols_with_dummies(seed, n, k):
    rng = make_rng(seed)
    x = rng.integers(0, k, n)
    a = rng.normal(size=n) + x
    y = 2.0 * a + x * 1.5 + rng.normal(size=n)
    t = table(y, a, x)
    try:
        fit = estimate(t, LinCoef("y", "a", ("x",)))
    except DegenerateExposure:
        return
    assert fit.theta == pytest.approx(ols_with_dummies(y, a, x), abs=1e-10)
    assert abs(np.mean(fit.eic_values)) < 1e-10


def test_lincoef_matches_statsmodels_se():
    from synthdebias.inference import se_mle

    rng = make_rng(4)
    n = 150
    x = rng.integers(0, 3, n)
    a = rng.normal(size=n)
    y = -1.0 * a + x + rng.normal(size=n)
    fit = estimate(table(y, a, x), LinCoef("y", "a", ("x",)))
    X = np.column_stack([a, *(x == lv for lv in range(3))]).astype(float)
    res = sm.OLS(y, X).fit()
    assert fit.theta == pytest.approx(res.params[0], abs=1e-10)
    assert se_mle(fit, LinCoef("y", "a", ("x",))) == pytest.approx(res.bse[0], rel=1e-10)


def test_lincoef_without_covariates_is_centered_ols():
    rng = make_rng(5)
    a, y = rng.normal(size=50), rng.normal(size=50)
    fit = estimate(table(y, a, np.zeros(50, int)), LinCoef("y", "a"))
    assert fit.theta == pytest.approx(np.polyfit(a, y, 1)[0], abs=1e-10)


def test_degenerate_exposure():
    with pytest.raises(DegenerateExposure):
        estimate(table([1, 2, 3, 4], [0, 0, 1, 1], [0, 0, 1, 1]), LinCoef("y", "a", ("x",)))


def test_cross_fitting_folds_and_dropping():
    rng = make_rng(6)
    n = 100
    x = rng.integers(0, 3, n)
    a = rng.normal(size=n)
    y = a + rng.normal(size=n)
    t = table(y, a, x)
    nuis = fit_nuisance(t, "y", "a", ("x",), k=5, rng=make_rng(1))
    counts = np.bincount(nuis.fold_assignment)
    assert counts.max() - counts.min() <= 1
    for f in range(5):
        held = nuis.fold_assignment == f
        train = ~held
        for lv in range(3):
            rows = held & (x == lv)
            if rows.any():
                assert np.allclose(nuis.pred_A[rows], a[train & (x == lv)].mean())
    fit = estimate_lincoef(t, nuis)
    assert fit.method == "EIC" and fit.n_used == n
    # a stratum seen once cannot be predicted out of fold
    x2 = x.copy()
    x2[0] = 3
    t2 = table(y, a, x2)
    with pytest.raises(StratumUnestimable):
        fit_nuisance(t2, "y", "a", ("x",), k=5, rng=make_rng(1))
    fit2 = estimate(t2, LinCoef("y", "a", ("x",)), folds=5, rng=make_rng(1), drop_unestimable=True)
    assert fit2.n_used == n - 1 and fit2.diagnostics["n_dropped"] == 1


def test_cross_fit_is_seed_deterministic():
    rng = make_rng(8)
    x = rng.integers(0, 2, 60)
    a, y = rng.normal(size=60), rng.normal(size=60)
    t = table(y, a, x)
    f1 = estimate(t, LinCoef("y", "a", ("x",)), folds=3, rng=make_rng(2))
    f2 = estimate(t, LinCoef("y", "a", ("x",)), folds=3, rng=make_rng(2))
    assert f1.theta == f2.theta


def test_risk_difference():
    y = [1, 0, 1, 1, 0, 0]
    arm = [1, 1, 1, 0, 0, 0]
    fit = estimate_risk_difference(table(y, [0] * 6, [0] * 6, arm), "y", "arm")
    assert fit.theta == pytest.approx(2 / 3 - 1 / 3)
    assert abs(np.mean(fit.eic_values)) < 1e-15
    with pytest.raises(EmptyArm):
        estimate_risk_difference(table(y, [0] * 6, [0] * 6, [1] * 6), "y", "arm")
