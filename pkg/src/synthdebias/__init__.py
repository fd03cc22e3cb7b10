"""Debias synthetic tabular data toward a target analysis.

Generators are fit to an original table, shifted so that a chosen plug-in
estimand (a mean, a stratum-adjusted regression coefficient or a two-arm risk
difference) matches the original data, and analysed with standard errors that
account for both the original and the synthetic sampling variability.
"""

__version__ = "0.1.0"

from synthdebias.debias import (
    DebiasReport,
    debias,
    debias_mean,
    debias_mean_per_arm,
    debias_regression,
    theta_under_generator,
)
from synthdebias.dgp import DgpParams, TrueParams, sample_dgp, stage_probabilities, true_parameters
from synthdebias.estimators import LinCoef, Mean, RiskDifference, estimate, parse_estimand
from synthdebias.generators import GeneratorSpec, fit_generator, parse_generator
from synthdebias.inference import EstimateReport, make_report, se_eic, se_mle, wald_ci
from synthdebias.quality import count_exact_copies, ikld, quality_report
from synthdebias.study import StudyConfig, fit_power_law, population_resample_study, run_study, type1_error
from synthdebias.table import ColumnKind, Schema, Table

__all__ = [
    "ColumnKind",
    "DebiasReport",
    "DgpParams",
    "EstimateReport",
    "GeneratorSpec",
    "LinCoef",
    "Mean",
    "RiskDifference",
    "Schema",
    "StudyConfig",
    "Table",
    "TrueParams",
    "count_exact_copies",
    "debias",
    "debias_mean",
    "debias_mean_per_arm",
    "debias_regression",
    "estimate",
    "fit_generator",
    "fit_power_law",
    "ikld",
    "make_report",
    "parse_estimand",
    "parse_generator",
    "population_resample_study",
    "quality_report",
    "run_study",
    "sample_dgp",
    "se_eic",
    "se_mle",
    "stage_probabilities",
    "theta_under_generator",
    "true_parameters",
    "type1_error",
    "wald_ci",
]
