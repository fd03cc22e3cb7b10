"""EIC-based estimators for the population mean, a partialling-out
regression coefficient and a two-arm risk difference.

Every estimator returns an :class:`EstimatorFit` holding the estimate and the
plug-in efficient influence curve evaluated at each row used.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from synthdebias import streams
from synthdebias.errors import (
    ConfigError,
    DegenerateExposure,
    EmptyArm,
    SchemaError,
    StratumUnestimable,
)
from synthdebias.table import Kind, key_labels, stratum_codes


@dataclass(frozen=True)
class Mean:
    column: str

    def columns(self):
        return (self.column,)

    def __str__(self):
        return f"mean:{self.column}"


@dataclass(frozen=True)
class LinCoef:
    outcome: str
    exposure: str
    covariates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))

    def columns(self):
        return (self.outcome, self.exposure, *self.covariates)

    def __str__(self):
        cov = ",".join(self.covariates)
        return f"lincoef:{self.outcome}~{self.exposure}" + (f"|{cov}" if cov else "")


@dataclass(frozen=True)
class RiskDifference:
    outcome: str
    arm: str

    def columns(self):
        return (self.outcome, self.arm)

    def __str__(self):
        return f"rd:{self.outcome}~{self.arm}"


_LINCOEF = re.compile(r"^\s*(\w+)\s*~\s*(\w+)\s*(?:\|\s*([\w\s,]*))?$")
_RD = re.compile(r"^\s*(\w+)\s*~\s*(\w+)\s*$")


def parse_estimand(text):
    """Parse ``mean:age``, ``lincoef:bp~therapy|stage`` or ``rd:death~aspirin``."""
    head, sep, body = str(text).partition(":")
    head = head.strip().lower()
    if not sep:
        raise ConfigError(f"bad estimand {text!r}")
    if head == "mean" and re.fullmatch(r"\s*\w+\s*", body):
        return Mean(body.strip())
    if head == "lincoef" and (m := _LINCOEF.match(body)):
        covs = tuple(c.strip() for c in (m.group(3) or "").split(",") if c.strip())
        return LinCoef(m.group(1), m.group(2), covs)
    if head == "rd" and (m := _RD.match(body)):
        return RiskDifference(m.group(1), m.group(2))
    raise ConfigError(f"bad estimand {text!r}")


def check_estimand(schema, spec):
    """Raise SchemaError unless the referenced columns exist with usable kinds."""
    for c in spec.columns():
        schema.kind(c)
    if isinstance(spec, Mean):
        if not schema.kind(spec.column).is_numeric:
            raise SchemaError(f"mean needs a continuous or binary column, got {spec.column!r}")
    elif isinstance(spec, LinCoef):
        for c in (spec.outcome, spec.exposure):
            if not schema.kind(c).is_numeric:
                raise SchemaError(f"lincoef column {c!r} must be continuous or binary")
        for c in spec.covariates:
            if not schema.kind(c).is_discrete:
                raise SchemaError(f"covariate {c!r} must be discrete")
    else:
        if schema.kind(spec.arm).kind is not Kind.BINARY:
            raise SchemaError(f"arm column {spec.arm!r} must be binary")
        if not schema.kind(spec.outcome).is_numeric:
            raise SchemaError(f"outcome {spec.outcome!r} must be binary or continuous")


@dataclass
class EstimatorFit:
    theta: float
    eic_values: np.ndarray
    n_used: int
    method: str = "EIC"
    diagnostics: dict = field(default_factory=dict)


def estimate_mean(table, column):
    """Sample average with EIC ``x_i - theta``."""
    if table.n_rows == 0:
        raise ValueError("mean of an empty table")
    kind = table.schema.kind(column)
    if not kind.is_numeric:
        raise SchemaError(f"mean needs a numeric column, got {kind.kind.value}")
    x = table.column(column).astype(np.float64)
    theta = float(np.mean(x))
    return EstimatorFit(theta, x - theta, x.size, "EIC", {})


@dataclass
class NuisanceModel:
    """Stratum means of exposure and outcome, optionally cross-fitted.

    ``pred_A``/``pred_Y`` hold each row's prediction (out-of-fold when
    ``folds > 1``); rows whose stratum had no training rows are flagged in
    ``usable`` and get NaN predictions.
    """

    outcome: str
    exposure: str
    covariates: tuple
    strata: dict
    folds: int
    fold_assignment: np.ndarray
    per_fold_strata: list
    pred_A: np.ndarray
    pred_Y: np.ndarray
    usable: np.ndarray

    @property
    def n_dropped(self):
        return int((~self.usable).sum())


def _stratum_table(codes, keys, a, y, rows):
    counts = np.bincount(codes[rows], minlength=len(keys))
    sum_a = np.bincount(codes[rows], weights=a[rows], minlength=len(keys))
    sum_y = np.bincount(codes[rows], weights=y[rows], minlength=len(keys))
    with np.errstate(invalid="ignore", divide="ignore"):
        return counts, sum_a / counts, sum_y / counts


def fit_nuisance(table, outcome, exposure, covariates, k=1, rng=None, drop_unestimable=False):
    """Per-stratum means of exposure and outcome.

    With ``k > 1`` rows are split into ``k`` balanced random folds and each
    row is predicted from the strata of the other folds.
    """
    covariates = tuple(covariates)
    n = table.n_rows
    if k < 1 or n < k:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    codes, keys = stratum_codes(table, covariates)
    a = table.column(exposure).astype(np.float64)
    y = table.column(outcome).astype(np.float64)
    counts, mean_a, mean_y = _stratum_table(codes, keys, a, y, slice(None))
    strata = {key: (float(mean_a[i]), float(mean_y[i]), int(counts[i])) for i, key in enumerate(keys)}
    if k == 1:
        fold = np.zeros(n, dtype=np.int64)
        per_fold = []
        pred_a, pred_y = mean_a[codes], mean_y[codes]
    else:
        rng = streams.as_rng(rng)
        fold = np.empty(n, dtype=np.int64)
        fold[rng.permutation(n)] = np.arange(n) % k
        pred_a = np.full(n, np.nan)
        pred_y = np.full(n, np.nan)
        per_fold = []
        for f in range(k):
            c_f, ma_f, my_f = _stratum_table(codes, keys, a, y, fold != f)
            per_fold.append(
                {key: (float(ma_f[i]), float(my_f[i]), int(c_f[i])) for i, key in enumerate(keys) if c_f[i] > 0}
            )
            held = fold == f
            pred_a[held] = ma_f[codes[held]]
            pred_y[held] = my_f[codes[held]]
    usable = np.isfinite(pred_a)
    if not usable.all() and not drop_unestimable:
        bad = keys[int(codes[np.flatnonzero(~usable)[0]])]
        raise StratumUnestimable(
            f"stratum {key_labels(table.schema, covariates, bad)} absent from the training folds"
        )
    return NuisanceModel(outcome, exposure, covariates, strata, k, fold, per_fold, pred_a, pred_y, usable)


def partialling_out(a, y, pred_a, pred_y):
    """Ratio estimate and its EIC from exposure and outcome residuals."""
    ra = a - pred_a
    ry = y - pred_y
    denom = float(np.sum(ra * ra))
    if denom < 1e-12:
        raise DegenerateExposure("no exposure variation left within strata")
    theta = float(np.sum(ra * ry) / denom)
    eic = ra * (ry - theta * ra) / (denom / ra.size)
    return theta, eic, ra, ry, denom


def estimate_lincoef(table, nuisance, spec=None):
    """Partialling-out coefficient of the exposure, given fitted nuisances.

    With ``k = 1`` stratum-mean nuisances this equals the least-squares
    coefficient of the exposure in a regression of the outcome on the
    exposure and stratum indicators.
    """
    if spec is not None and (spec.outcome, spec.exposure, tuple(spec.covariates)) != (
        nuisance.outcome,
        nuisance.exposure,
        nuisance.covariates,
    ):
        raise ValueError("nuisance model was fit for a different estimand")
    rows = nuisance.usable
    a = table.column(nuisance.exposure).astype(np.float64)[rows]
    y = table.column(nuisance.outcome).astype(np.float64)[rows]
    theta, eic, ra, ry, denom = partialling_out(a, y, nuisance.pred_A[rows], nuisance.pred_Y[rows])
    n_strata = len(np.unique(stratum_codes(table.take(rows), nuisance.covariates)[0]))
    diagnostics = {
        "denominator": denom,
        "rss": float(np.sum((ry - theta * ra) ** 2)),
        "n_strata": n_strata,
        "folds": nuisance.folds,
        "n_dropped": nuisance.n_dropped,
    }
    method = "MLE" if nuisance.folds == 1 else "EIC"
    return EstimatorFit(theta, eic, int(rows.sum()), method, diagnostics)


def estimate_risk_difference(table, outcome, arm):
    """Difference in outcome means between ``arm == 1`` and ``arm == 0``."""
    g = table.column(arm)
    y = table.column(outcome).astype(np.float64)
    in1 = g == 1
    m1, m0 = int(in1.sum()), int((~in1).sum())
    if m1 == 0 or m0 == 0:
        raise EmptyArm(f"arm {arm!r} has an empty group (sizes {m0}, {m1})")
    mu1, mu0 = float(y[in1].mean()), float(y[~in1].mean())
    p1 = m1 / y.size
    p0 = m0 / y.size
    eic = np.where(in1, (y - mu1) / p1, -(y - mu0) / p0)
    diagnostics = {
        "mean_1": mu1,
        "mean_0": mu0,
        "var_1": float(np.mean((y[in1] - mu1) ** 2)),
        "var_0": float(np.mean((y[~in1] - mu0) ** 2)),
        "m_1": m1,
        "m_0": m0,
        "share_1": p1,
        "share_0": p0,
    }
    return EstimatorFit(mu1 - mu0, eic, y.size, "EIC", diagnostics)


def estimate(table, spec, folds=1, rng=None, drop_unestimable=True):
    """Fit any estimand; ``folds`` only matters for :class:`LinCoef`."""
    if isinstance(spec, Mean):
        return estimate_mean(table, spec.column)
    if isinstance(spec, RiskDifference):
        return estimate_risk_difference(table, spec.outcome, spec.arm)
    nuis = fit_nuisance(table, spec.outcome, spec.exposure, spec.covariates, folds, rng, drop_unestimable)
    return estimate_lincoef(table, nuis, spec)


def bias_term_synthetic_plugin(fit):
    """Negative average EIC over the analysis sample (zero for these estimators)."""
    return -float(np.mean(fit.eic_values))
