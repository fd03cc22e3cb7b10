"""Ground-truth data generating process for the hypothetical-disease simulation.

Four variables: age (normal), atherosclerosis stage (ordinal, cumulative
logit in age), therapy (randomised 1:1) and blood pressure (normal, linear in
stage and therapy). The exposure is randomised and the outcome model is
linear, so the stage-adjusted therapy coefficient equals ``beta_therapy``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from synthdebias import streams
from synthdebias.errors import ConfigError
from synthdebias.table import ColumnKind, Schema, Table

STAGES = ("I", "II", "III", "IV")

DGP_SCHEMA = Schema(
    (
        ("age", ColumnKind.continuous()),
        ("stage", ColumnKind.ordinal(STAGES)),
        ("therapy", ColumnKind.binary()),
        ("bp", ColumnKind.continuous()),
    )
)


@dataclass(frozen=True)
class DgpParams:
    mean_age: float = 50.0
    sd_age: float = 10.0
    nu_intercepts: tuple = (2.0, 3.0, 4.0)
    nu_age: float = 0.05
    p_therapy: float = 0.5
    beta_stage: tuple = (0.0, 10.0, 20.0, 30.0)
    beta_therapy: float = -20.0
    baseline_bp: float = 120.0
    sd_bp: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "nu_intercepts", tuple(float(v) for v in self.nu_intercepts))
        object.__setattr__(self, "beta_stage", tuple(float(v) for v in self.beta_stage))
        if self.sd_age <= 0 or self.sd_bp <= 0:
            raise ConfigError("dgp: sd_age and sd_bp must be positive")
        if not 0 < self.p_therapy < 1:
            raise ConfigError("dgp: p_therapy must lie in (0, 1)")
        if len(self.nu_intercepts) != 3 or len(self.beta_stage) != 4:
            raise ConfigError("dgp: need 3 stage intercepts and 4 stage effects")
        if np.any(np.diff(self.nu_intercepts) <= 0):
            raise ConfigError("dgp: nu_intercepts must be strictly increasing")

    def to_dict(self):
        d = asdict(self)
        d["nu_intercepts"] = list(self.nu_intercepts)
        d["beta_stage"] = list(self.beta_stage)
        return d


@dataclass(frozen=True)
class TrueParams:
    mean_age: float
    therapy_effect: float


def stage_probabilities(age, params=DgpParams()):
    """P(stage = I..IV | age) under the cumulative-logit model.

    Works on scalars (returns shape ``(4,)``) and arrays (shape ``(n, 4)``).
    """
    age = np.asarray(age, dtype=np.float64)
    nu = np.asarray(params.nu_intercepts)
    cum = expit(nu[None, :] - params.nu_age * age.reshape(-1, 1))
    probs = np.diff(cum, axis=1, prepend=0.0, append=1.0)
    probs = np.clip(probs, 0.0, None)
    return probs[0] if age.ndim == 0 else probs


def sample_dgp(n, params=DgpParams(), rng=None):
    """Draw ``n`` rows (age, stage, therapy, bp)."""
    rng = streams.as_rng(rng)
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    age = streams.normal(rng, n, params.mean_age, params.sd_age)
    stage = streams.categorical(rng, stage_probabilities(age, params)) if n else np.zeros(0, np.int64)
    therapy = streams.bernoulli(rng, params.p_therapy, n)
    mu = params.baseline_bp + np.asarray(params.beta_stage)[stage] + params.beta_therapy * therapy
    bp = streams.normal(rng, n, mu, params.sd_bp)
    return Table(DGP_SCHEMA, {"age": age, "stage": stage, "therapy": therapy, "bp": bp})


def true_parameters(params=DgpParams()):
    return TrueParams(mean_age=params.mean_age, therapy_effect=params.beta_therapy)


# Two-arm binary-outcome population standing in for a large randomised trial.
POPULATION_SCHEMA = Schema(
    (
        ("sex", ColumnKind.binary()),
        ("aspirin", ColumnKind.binary()),
        ("death", ColumnKind.binary()),
    )
)


def make_trial_population(size=19285, p_death_control=0.225, risk_difference=-0.009, seed=19285):
    """Two-arm trial population with a fixed death count per arm.

    Death counts are set deterministically so the population risk difference
    equals ``risk_difference`` up to integer rounding; row order and sex are
    random.
    """
    rng = streams.make_rng(seed)
    n1 = size // 2
    n0 = size - n1
    d0 = int(round(p_death_control * n0))
    d1 = int(round((d0 / n0 + risk_difference) * n1))
    aspirin = np.r_[np.zeros(n0, np.int64), np.ones(n1, np.int64)]
    death = np.r_[np.arange(n0) < d0, np.arange(n1) < d1].astype(np.int64)
    order = rng.permutation(size)
    sex = streams.bernoulli(rng, 0.47, size)
    return Table(POPULATION_SCHEMA, {"sex": sex, "aspirin": aspirin[order], "death": death[order]})
