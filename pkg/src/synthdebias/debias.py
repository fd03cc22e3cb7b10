"""Shift a fitted generator so that its plug-in estimand matches the original data.

* Mean: add ``mean(original) - theta(generator)`` to the column.
* Regression coefficient: add ``b * (A - E_gen(A | X))`` to the outcome, with
  ``b`` the original-data partialling-out ratio (using the generator's
  conditional means as nuisances) minus the generator's own coefficient.
* Risk difference: mean-shift the outcome separately within each arm.

The generator's functionals are approximated from large samples: ``k_large``
unconditional rows for ``theta(generator)`` and ``k_cond`` conditional rows per
observed covariate stratum for ``E_gen(A | X)`` and ``E_gen(Y | X)``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from synthdebias import streams
from synthdebias.errors import ConditionTooRare, EmptyArm, SynthDebiasError
from synthdebias.estimators import (
    LinCoef,
    Mean,
    RiskDifference,
    check_estimand,
    estimate_risk_difference,
    fit_nuisance,
    partialling_out,
)
from synthdebias.generators import (
    MeanShiftedGenerator,
    PerArmShiftedGenerator,
    RegressionShiftedGenerator,
    fit_generator,
    sample_conditional,
)
from synthdebias.table import column_mean, key_labels, stratum_codes

K_LARGE = 1_000_000
K_COND = 100_000
MIN_K_LARGE = 10_000


@dataclass
class DebiasReport:
    estimand: str
    theta_hat_Pn: float
    shift: float
    k_large: int
    k_cond: int = 0
    target: float = float("nan")
    residual_b_after_shift: float = None
    warnings: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _check_k(k_large):
    if k_large < MIN_K_LARGE:
        raise ValueError(f"k_large must be at least {MIN_K_LARGE}, got {k_large}")


def _predictions(table, covariates, mean_a, mean_y, fallback):
    """Per-row conditional means from stratum maps; missing strata use the large-sample table."""
    codes, keys = stratum_codes(table, covariates)
    pa = np.empty(len(keys))
    py = np.empty(len(keys))
    missing = []
    for i, key in enumerate(keys):
        if key in mean_a:
            pa[i], py[i] = mean_a[key], mean_y[key]
        else:
            pa[i], py[i] = fallback
            missing.append(key)
    return pa[codes], py[codes], missing


def _lincoef_with_means(table, spec, mean_a, mean_y, fallback=(np.nan, np.nan)):
    pa, py, missing = _predictions(table, spec.covariates, mean_a, mean_y, fallback)
    a = table.column(spec.exposure).astype(np.float64)
    y = table.column(spec.outcome).astype(np.float64)
    theta, *_ = partialling_out(a, y, pa, py)
    return theta, missing


def theta_under_generator(gen, estimand, k_large, rng, cond_means=None):
    """Plug-in value of ``estimand`` on a fresh ``k_large`` sample from ``gen``.

    For a regression coefficient, ``cond_means`` may supply the stratum maps
    ``(mean_A, mean_Y)`` to use as nuisances; strata they lack (and the whole
    map when omitted) fall back to stratum means of the large sample itself.
    """
    _check_k(k_large)
    big = gen.sample(k_large, rng)
    if isinstance(estimand, Mean):
        return column_mean(big, estimand.column)
    if isinstance(estimand, RiskDifference):
        return estimate_risk_difference(big, estimand.outcome, estimand.arm).theta
    return _generator_lincoef(big, estimand, cond_means)[0]


def _generator_lincoef(big, spec, cond_means):
    nuis = fit_nuisance(big, spec.outcome, spec.exposure, spec.covariates, k=1)
    mean_a = {k: v[0] for k, v in nuis.strata.items()}
    mean_y = {k: v[1] for k, v in nuis.strata.items()}
    if cond_means is not None:
        mean_a.update(cond_means[0])
        mean_y.update(cond_means[1])
    theta, _ = _lincoef_with_means(big, spec, mean_a, mean_y)
    return theta, mean_a, mean_y


def regression_bias_from_means(original, spec, mean_a, mean_y, theta_gen):
    """Bias ``b``: original-data ratio with generator nuisances minus ``theta_gen``."""
    theta_orig, missing = _lincoef_with_means(original, spec, mean_a, mean_y)
    if missing:
        raise KeyError(f"no conditional means for strata {missing}")
    return theta_orig - theta_gen


def regression_bias(gen, original, spec, k_large, k_cond, rng, strict=True, method="auto"):
    """Estimate ``b`` for ``gen`` against ``original``.

    Returns a dict with ``b``, ``theta_gen``, ``theta_orig``, the stratum
    maps ``mean_A``/``mean_Y`` (observed strata from conditional samples,
    others from the large sample), the marginal fallback means and warnings.
    """
    _check_k(k_large)
    codes, keys = stratum_codes(original, spec.covariates)
    cond_a, cond_y, warnings, failed = {}, {}, [], []
    for key in keys:
        assignment = dict(zip(spec.covariates, key))
        try:
            t = sample_conditional(gen, assignment, k_cond, rng, method=method)
        except ConditionTooRare as exc:
            if strict:
                raise ConditionTooRare(key_labels(original.schema, spec.covariates, key), exc.found, exc.requested, exc.draws) from None
            failed.append(key)
            warnings.append(f"stratum {key_labels(original.schema, spec.covariates, key)} too rare; using fallback means")
            continue
        cond_a[key] = float(np.mean(t.column(spec.exposure)))
        cond_y[key] = float(np.mean(t.column(spec.outcome)))
    big = gen.sample(k_large, rng)
    fallback = (
        float(np.mean(big.column(spec.exposure))),
        float(np.mean(big.column(spec.outcome))),
    )
    theta_gen, mean_a, mean_y = _generator_lincoef(big, spec, (cond_a, cond_y))
    for key in failed:
        mean_a.setdefault(key, fallback[0])
        mean_y.setdefault(key, fallback[1])
    theta_orig, _ = _lincoef_with_means(original, spec, mean_a, mean_y)
    return {
        "b": theta_orig - theta_gen,
        "theta_gen": theta_gen,
        "theta_orig": theta_orig,
        "mean_A": mean_a,
        "mean_Y": mean_y,
        "fallback": fallback,
        "warnings": warnings,
    }


def debias_mean(gen, original, column, k_large=K_LARGE, rng=None):
    """Shift ``column`` so the generator's mean equals the original sample mean."""
    rng = streams.as_rng(rng)
    if original.n_rows == 0:
        raise ValueError("original data are empty")
    target = column_mean(original, column)
    theta = theta_under_generator(gen, Mean(column), k_large, rng)
    delta = target - theta
    warnings = []
    if gen.schema.kind(column).kind.value == "binary":
        warnings.append(f"binary column {column!r} shifted; values leave {{0, 1}} and are treated as continuous")
    report = DebiasReport(str(Mean(column)), theta, delta, k_large, 0, target, warnings=warnings)
    return MeanShiftedGenerator(gen, column, delta), report


def debias_regression(
    gen, original, spec, k_large=K_LARGE, k_cond=K_COND, rng=None, strict=True, check_residual=True, method="auto"
):
    """Shift the outcome by ``b * (A - E_gen(A | X))``.

    With ``check_residual`` the bias is recomputed against the shifted
    generator on an independent stream and stored as
    ``residual_b_after_shift`` (it should vanish up to Monte Carlo noise).
    """
    rng = streams.as_rng(rng)
    check_estimand(original.schema, spec)
    if original.n_rows == 0:
        raise ValueError("original data are empty")
    residual_rng = streams.child(rng)
    est = regression_bias(gen, original, spec, k_large, k_cond, rng, strict, method)
    wrapper = RegressionShiftedGenerator(
        gen, spec.outcome, spec.exposure, spec.covariates, est["b"], est["mean_A"], est["fallback"][0], strict
    )
    report = DebiasReport(
        str(spec),
        est["theta_gen"],
        est["b"],
        k_large,
        k_cond,
        est["theta_orig"],
        warnings=list(est["warnings"]),
        extra={"n_strata": len(est["mean_A"])},
    )
    if check_residual:
        try:
            again = regression_bias(wrapper, original, spec, k_large, k_cond, residual_rng, strict, method)
            report.residual_b_after_shift = again["b"]
        except SynthDebiasError as exc:
            report.warnings.append(f"residual check failed: {exc}")
    return wrapper, report


def debias_mean_per_arm(gen, original, outcome, arm, k_large=K_LARGE, rng=None, method="auto"):
    """Mean-shift the outcome within each arm so arm means match the original data."""
    rng = streams.as_rng(rng)
    _check_k(k_large)
    arms = original.column(arm)
    deltas, reports = {}, []
    for level in (0, 1):
        rows = arms == level
        if not rows.any():
            raise EmptyArm(f"arm {arm}={level} has no original rows")
        target = float(np.mean(original.column(outcome)[rows]))
        t = sample_conditional(gen, {arm: level}, k_large, rng, method=method)
        theta = float(np.mean(t.column(outcome)))
        deltas[level] = target - theta
        reports.append(
            DebiasReport(f"mean:{outcome}|{arm}={level}", theta, target - theta, k_large, 0, target, extra={"arm": level})
        )
    return PerArmShiftedGenerator(gen, outcome, arm, deltas), reports


def debias(gen, original, estimand, k_large=K_LARGE, k_cond=K_COND, rng=None, strict=True, check_residual=False):
    """Dispatch to the debiasing transform for ``estimand``; returns (wrapper, [reports])."""
    if isinstance(estimand, Mean):
        w, r = debias_mean(gen, original, estimand.column, k_large, rng)
        return w, [r]
    if isinstance(estimand, LinCoef):
        w, r = debias_regression(gen, original, estimand, k_large, k_cond, rng, strict, check_residual)
        return w, [r]
    return debias_mean_per_arm(gen, original, estimand.outcome, estimand.arm, k_large, rng)


def debias_split(spec, gen, original, estimand, folds, k_large=K_LARGE, k_cond=K_COND, rng=None, strict=True):
    """Debias ``gen`` with shifts averaged over ``folds`` train/held-out splits.

    For each fold a generator of type ``spec`` is trained on the other folds
    and the bias is computed against the held-out rows; the average bias is
    then applied to ``gen`` (the generator trained on all rows).
    """
    rng = streams.as_rng(rng)
    n = original.n_rows
    if folds < 2 or n < folds:
        raise ValueError(f"need 2 <= folds <= n, got {folds}")
    assign = np.empty(n, dtype=np.int64)
    assign[rng.permutation(n)] = np.arange(n) % folds
    shifts = []
    for f in range(folds):
        train, held = original.take(assign != f), original.take(assign == f)
        gen_f = fit_generator(spec, train, rng)
        if isinstance(estimand, Mean):
            theta = theta_under_generator(gen_f, estimand, k_large, rng)
            shifts.append([column_mean(held, estimand.column) - theta])
        elif isinstance(estimand, LinCoef):
            shifts.append([regression_bias(gen_f, held, estimand, k_large, k_cond, rng, strict)["b"]])
        else:
            _, reps = debias_mean_per_arm(gen_f, held, estimand.outcome, estimand.arm, k_large, rng)
            shifts.append([r.shift for r in reps])
    avg = np.mean(np.asarray(shifts), axis=0)
    if isinstance(estimand, Mean):
        theta = theta_under_generator(gen, estimand, k_large, rng)
        report = DebiasReport(str(estimand), theta, float(avg[0]), k_large, extra={"split_folds": folds})
        return MeanShiftedGenerator(gen, estimand.column, avg[0]), [report]
    if isinstance(estimand, LinCoef):
        est = regression_bias(gen, original, estimand, k_large, k_cond, rng, strict)
        wrapper = RegressionShiftedGenerator(
            gen, estimand.outcome, estimand.exposure, estimand.covariates, avg[0], est["mean_A"], est["fallback"][0], strict
        )
        report = DebiasReport(
            str(estimand), est["theta_gen"], float(avg[0]), k_large, k_cond, warnings=est["warnings"], extra={"split_folds": folds}
        )
        return wrapper, [report]
    deltas = {0: float(avg[0]), 1: float(avg[1])}
    reports = [
        DebiasReport(f"mean:{estimand.outcome}|{estimand.arm}={g}", float("nan"), deltas[g], k_large, extra={"arm": g, "split_folds": folds})
        for g in (0, 1)
    ]
    return PerArmShiftedGenerator(gen, estimand.outcome, estimand.arm, deltas), reports
