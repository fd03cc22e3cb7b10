"""Standard errors, Wald intervals and the estimate report.

Two variance conventions are used on purpose:

* :func:`se_mle` is the classical model-based SE (sample variance with the
  ``m - 1`` denominator for a mean, residual variance on ``m - p`` degrees of
  freedom for a regression coefficient), inflated by ``sqrt(1 + m / n)`` for
  synthetic data.
* :func:`se_eic` is the plug-in ``sqrt((1/m + 1/n) * mean(phi ** 2))`` using
  the ``m`` denominator.

For a mean analysed on synthetic data the two therefore differ by exactly
``sqrt((m - 1) / m)``.
"""

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri

from synthdebias.estimators import LinCoef, Mean, RiskDifference

Z_975 = 1.959963984540054
SE_MIN = 1e-10
SE_MAX = 1e2


class DataKind(str, Enum):
    ORIGINAL = "original"
    DEFAULT = "default"
    DEBIASED = "debiased"


def correction_factor(m, n):
    return float(np.sqrt(1.0 + m / n))


def se_mle(fit, estimand):
    """Classical SE of the estimate, ignoring synthetic-data variability."""
    m = fit.n_used
    if isinstance(estimand, Mean):
        if m < 2:
            return 0.0
        return float(np.sqrt(np.sum(fit.eic_values**2) / (m - 1) / m))
    if isinstance(estimand, LinCoef):
        d = fit.diagnostics
        dof = m - d["n_strata"] - 1
        if dof <= 0:
            return 0.0
        return float(np.sqrt(d["rss"] / dof / d["denominator"]))
    if isinstance(estimand, RiskDifference):
        d = fit.diagnostics
        return float(np.sqrt(d["var_1"] / d["m_1"] + d["var_0"] / d["m_0"]))
    raise TypeError(f"unknown estimand {estimand!r}")


def se_eic(fit, n=None):
    """EIC-based SE; ``n`` is the original sample size (None for original data)."""
    m = fit.n_used
    second = float(np.mean(fit.eic_values**2))
    scale = 1.0 / m if n is None else 1.0 / m + 1.0 / n
    return float(np.sqrt(scale * second))


def wald_ci(theta, se, level=0.95):
    if se < 0:
        raise ValueError("se must be non-negative")
    z = Z_975 if level == 0.95 else float(ndtri(0.5 + level / 2))
    return theta - z * se, theta + z * se


def covers(ci, truth):
    return bool(ci[0] <= truth <= ci[1])


def is_estimable(se):
    return SE_MIN <= se <= SE_MAX


@dataclass
class EstimateReport:
    estimand: str
    theta: float
    se_mle: float
    se_mle_corrected: float
    se_eic: float
    ci_low: float
    ci_high: float
    n: int
    m: int
    data_kind: str
    se_method: str

    @property
    def se(self):
        return self.se_mle_corrected if self.se_method == "MLE" else self.se_eic

    def to_dict(self):
        return asdict(self)


def make_report(fit, estimand, n, data_kind, se_method=None, level=0.95):
    """Assemble SEs and the interval for one fit.

    ``se_method`` defaults to the fit's own method. The MLE interval uses the
    corrected classical SE, the EIC interval the EIC-based SE.
    """
    data_kind = DataKind(data_kind)
    se_method = se_method or fit.method
    m = fit.n_used
    raw = se_mle(fit, estimand)
    if data_kind is DataKind.ORIGINAL:
        corrected = raw
        eic = se_eic(fit, None)
    else:
        corrected = raw * correction_factor(m, n)
        eic = se_eic(fit, n)
    se = corrected if se_method == "MLE" else eic
    low, high = wald_ci(fit.theta, se, level)
    return EstimateReport(
        estimand=str(estimand),
        theta=fit.theta,
        se_mle=raw,
        se_mle_corrected=corrected,
        se_eic=eic,
        ci_low=low,
        ci_high=high,
        n=int(n),
        m=int(m),
        data_kind=data_kind.value,
        se_method=se_method,
    )
