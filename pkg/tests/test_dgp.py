import numpy as np
import pytest
from scipy.special import expit

from synthdebias.dgp import (
    DgpParams,
    make_trial_population,
    sample_dgp,
    stage_probabilities,
    true_parameters,
)
from synthdebias.errors import ConfigError
from synthdebias.estimators import RiskDifference, estimate
from synthdebias.streams import make_rng


@pytest.fixture(scope="module")
def big():
    return sample_dgp(1_000_000, DgpParams(), make_rng(11))


def test_stage_one_probability_at_fifty():
    p = stage_probabilities(50.0)
    assert p[0] == pytest.approx(expit(-0.5), abs=1e-15)
    assert p[0] == pytest.approx(0.37754, abs=1e-5)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_stage_probabilities_limits_and_no_age_effect():
    assert np.allclose(stage_probabilities(1e6), [0, 0, 0, 1])
    flat = DgpParams(nu_age=0.0)
    assert np.allclose(stage_probabilities(20.0, flat), stage_probabilities(80.0, flat))
    ages = np.linspace(-100, 200, 301)
    p = stage_probabilities(ages)
    assert p.shape == (301, 4) and np.all(p >= 0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_params_validation():
    with pytest.raises(ConfigError):
        DgpParams(nu_intercepts=(3.0, 2.0, 4.0))
    with pytest.raises(ConfigError):
        DgpParams(sd_bp=0.0)
    with pytest.raises(ConfigError):
        DgpParams(p_therapy=1.0)


def test_true_parameters():
    tp = true_parameters()
    assert (tp.mean_age, tp.therapy_effect) == (50.0, -20.0)
    assert true_parameters(DgpParams(beta_therapy=0.0)).therapy_effect == 0.0
    assert true_parameters(DgpParams(mean_age=60.0)).mean_age == 60.0


def test_empty_sample_and_determinism():
    e = sample_dgp(0, DgpParams(), make_rng(1))
    assert e.n_rows == 0 and list(e.schema.names) == ["age", "stage", "therapy", "bp"]
    assert sample_dgp(200, DgpParams(), make_rng(3)) == sample_dgp(200, DgpParams(), make_rng(3))


def test_large_sample_mean_age(big):
    assert abs(big.column("age").mean() - 50) < 5 * 10 / np.sqrt(big.n_rows)


def test_large_sample_therapy_coefficient(big):
    stage, therapy, bp = big.column("stage"), big.column("therapy"), big.column("bp")
    X = np.column_stack([np.ones(big.n_rows), therapy, *(stage == s for s in (1, 2, 3))]).astype(float)
    coef, rss, *_ = np.linalg.lstsq(X, bp, rcond=None)
    se = np.sqrt(rss[0] / (big.n_rows - X.shape[1]) * np.linalg.inv(X.T @ X)[1, 1])
    assert abs(coef[1] + 20) < 5 * se


def test_conditional_bp_means(big):
    stage, therapy, bp = big.column("stage"), big.column("therapy"), big.column("bp")
    beta = (0, 10, 20, 30)
    for s in range(4):
        for t in (0, 1):
            cell = (stage == s) & (therapy == t)
            if cell.sum() < 2:
                continue
            assert abs(bp[cell].mean() - (120 + beta[s] - 20 * t)) < 5 * 10 / np.sqrt(cell.sum())


def test_stage_one_share_matches_integrated_probability(big):
    ages = 50 + 10 * make_rng(99).standard_normal(1_000_000)
    expected = stage_probabilities(ages)[:, 0].mean()
    assert abs(np.mean(big.column("stage") == 0) - expected) < 0.005


def test_trial_population_risk_difference():
    pop = make_trial_population()
    assert pop.n_rows == 19285
    rd = estimate(pop, RiskDifference("death", "aspirin")).theta
    assert rd == pytest.approx(-0.009, abs=1e-4)
