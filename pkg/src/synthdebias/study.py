"""Monte Carlo study harness.

One task is one ``(n, run)`` pair: draw the original data, estimate on it,
then for every generator fit, sample a default synthetic table, debias per
estimand and sample a debiased table. Every random phase draws from its own
stream keyed by ``(seed, n, run, generator slot, phase, sub-index)`` so that
records do not depend on execution order or worker count.
"""

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial

import numpy as np
from scipy import stats

from synthdebias.debias import MIN_K_LARGE, debias, debias_split
from synthdebias.dgp import DgpParams, sample_dgp, true_parameters
from synthdebias.errors import ConfigError, SynthDebiasError
from synthdebias.estimators import LinCoef, Mean, RiskDifference, check_estimand, estimate
from synthdebias.generators import GeneratorSpec, fit_generator
from synthdebias.inference import is_estimable, make_report
from synthdebias.quality import count_exact_copies, ikld
from synthdebias.streams import Phase, make_rng

METHODS = ("MLE", "EIC")
ORIGINAL_LABEL = "none"


@dataclass(frozen=True)
class StudyConfig:
    """Monte Carlo experiment specification.

    ``m`` is None for ``m = n`` or a fixed synthetic size. ``debias`` lists
    the estimand strings (as in ``str(estimand)``) that get a debiased
    generator. ``population`` switches to resampling rows without
    replacement from a finite table, whose plug-in values are the truth.
    ``truth`` overrides truth values per estimand string.
    ``split_folds`` > 1 computes debiasing shifts with sample splitting.
    """

    n_grid: tuple = (50, 160, 500, 1600, 5000)
    runs: int = 250
    m: int = None
    generators: tuple = (GeneratorSpec("parametric"),)
    estimands: tuple = (Mean("age"),)
    debias: tuple = None
    methods: tuple = METHODS
    nuisance_folds: int = 5
    seed: int = 20240601
    dgp: DgpParams = field(default_factory=DgpParams)
    population: object = None
    truth: dict = field(default_factory=dict)
    k_large: int = 100_000
    k_cond: int = 20_000
    split_folds: int = 0
    strict: bool = False
    quality: bool = False

    def __post_init__(self):
        grid = tuple(int(v) for v in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid or any(v < 2 for v in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n_grid must be strictly increasing sizes >= 2, got {list(grid)}")
        if int(self.runs) < 2:
            raise ConfigError(f"runs must be at least 2, got {self.runs}")
        if self.m is not None and int(self.m) < 1:
            raise ConfigError(f"m must be positive, got {self.m}")
        if not self.generators:
            raise ConfigError("at least one generator is required")
        if not self.estimands:
            raise ConfigError("at least one estimand is required")
        for name in ("generators", "estimands", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        labels = [str(e) for e in self.estimands]
        deb = tuple(labels if self.debias is None else (str(d) for d in self.debias))
        unknown = set(deb) - set(labels)
        if unknown:
            raise ConfigError(f"debias names unknown estimands {sorted(unknown)}")
        object.__setattr__(self, "debias", deb)
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ConfigError(f"methods must be a non-empty subset of {METHODS}")
        if int(self.nuisance_folds) < 2 and "EIC" in self.methods:
            raise ConfigError("nuisance_folds must be at least 2 for the EIC method")
        if self.k_large < MIN_K_LARGE:
            raise ConfigError(f"k_large must be at least {MIN_K_LARGE}")
        if self.k_cond < 1:
            raise ConfigError("k_cond must be positive")
        if self.split_folds == 1 or self.split_folds < 0:
            raise ConfigError("split_folds must be 0 (off) or at least 2")
        if self.population is not None:
            if self.population.n_rows < grid[-1]:
                raise ConfigError(
                    f"population has {self.population.n_rows} rows, fewer than max n {grid[-1]}"
                )
            schema = self.population.schema
        else:
            schema = sample_dgp(0, self.dgp).schema
        for e in self.estimands:
            try:
                check_estimand(schema, e)
            except KeyError as exc:
                raise ConfigError(f"estimand {e}: unknown column {exc}") from None
            except SynthDebiasError as exc:
                raise ConfigError(f"estimand {e}: {exc}") from None

    def m_for(self, n):
        return n if self.m is None else int(self.m)

    def to_dict(self):
        return {
            "n_grid": list(self.n_grid),
            "runs": self.runs,
            "m": "n" if self.m is None else self.m,
            "generators": [g.to_dict() for g in self.generators],
            "estimands": [str(e) for e in self.estimands],
            "debias": list(self.debias),
            "methods": list(self.methods),
            "nuisance_folds": self.nuisance_folds,
            "seed": self.seed,
            "dgp": None if self.population is not None else self.dgp.to_dict(),
            "population_rows": None if self.population is None else self.population.n_rows,
            "truth": dict(self.truth),
            "k_large": self.k_large,
            "k_cond": self.k_cond,
            "split_folds": self.split_folds,
            "strict": self.strict,
            "quality": self.quality,
        }


def resolve_truth(config):
    """Truth per estimand string: overrides, then population plug-in or DGP constants."""
    out = {}
    for e in config.estimands:
        key = str(e)
        if key in config.truth:
            out[key] = float(config.truth[key])
        elif config.population is not None:
            out[key] = estimate(config.population, e, folds=1).theta
        else:
            tp = true_parameters(config.dgp)
            if isinstance(e, Mean) and e.column == "age":
                out[key] = tp.mean_age
            elif isinstance(e, LinCoef) and (e.outcome, e.exposure) == ("bp", "therapy") and "stage" in e.covariates:
                out[key] = tp.therapy_effect
            else:
                raise ConfigError(f"no known truth for {key}; supply it under 'truth'")
    return out


@dataclass
class RunRecord:
    n: int
    generator: str
    data_kind: str
    estimand: str
    se_method: str
    run: int
    m: int
    truth: float
    theta: float = math.nan
    se: float = math.nan
    se_mle: float = math.nan
    se_mle_corrected: float = math.nan
    se_eic: float = math.nan
    ci_low: float = math.nan
    ci_high: float = math.nan
    covered: bool = None
    failure: str = ""
    detail: str = ""

    @property
    def key(self):
        return (self.n, self.generator, self.data_kind, self.estimand, self.se_method, self.run)

    @property
    def cell(self):
        return self.key[:-1]

    @property
    def valid(self):
        return not self.failure

    def to_dict(self):
        return asdict(self)


RUN_FIELDS = tuple(f.name for f in fields(RunRecord))


@dataclass
class QualityRecord:
    n: int
    generator: str
    run: int
    ikld: float
    exact_copies: int


def _analyse(table, estimand, n, kind, methods, folds, nuis_rng, base):
    """Records for every SE method of one estimand on one table."""
    out = []
    for method in methods:
        rec = RunRecord(**base, se_method=method, m=table.n_rows)
        try:
            k = folds if (method == "EIC" and isinstance(estimand, LinCoef)) else 1
            fit = estimate(table, estimand, folds=k, rng=nuis_rng)
            rep = make_report(fit, estimand, n, kind, se_method=method)
        except (SynthDebiasError, ValueError) as exc:
            rec.failure, rec.detail = "NonEstimable", f"{type(exc).__name__}: {exc}"
            out.append(rec)
            continue
        rec.m = rep.m
        rec.theta, rec.se = rep.theta, rep.se
        rec.se_mle, rec.se_mle_corrected, rec.se_eic = rep.se_mle, rep.se_mle_corrected, rep.se_eic
        rec.ci_low, rec.ci_high = rep.ci_low, rep.ci_high
        if not is_estimable(rep.se):
            rec.failure, rec.detail = "NonEstimable", f"se={rep.se:.3g} outside [1e-10, 1e2]"
        else:
            rec.covered = bool(rep.ci_low <= rec.truth <= rep.ci_high)
        out.append(rec)
    return out


def _failed(base, methods, m, failure, exc):
    return [
        RunRecord(**base, se_method=meth, m=m, failure=failure, detail=f"{type(exc).__name__}: {exc}")
        for meth in methods
    ]


def _original(config, n, run):
    rng = make_rng(config.seed, n, run, 0, Phase.DGP)
    if config.population is None:
        return sample_dgp(n, config.dgp, rng)
    idx = rng.permutation(config.population.n_rows)[:n]
    return config.population.take(np.sort(idx))


def run_task(config, truth, n, run):
    """All records (and quality records) for one ``(n, run)`` pair."""
    seed = config.seed
    m = config.m_for(n)
    records, quality = [], []
    original = _original(config, n, run)
    for j, e in enumerate(config.estimands):
        base = dict(n=n, generator=ORIGINAL_LABEL, data_kind="original", estimand=str(e), run=run, truth=truth[str(e)])
        nuis = make_rng(seed, n, run, 0, Phase.NUISANCE, j)
        records += _analyse(original, e, n, "original", config.methods, config.nuisance_folds, nuis, base)

    for gi, spec in enumerate(config.generators):
        slot = gi + 1
        label = spec.label

        def base(e, kind):
            return dict(n=n, generator=label, data_kind=kind, estimand=str(e), run=run, truth=truth[str(e)])

        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                gen = fit_generator(spec, original, make_rng(seed, n, run, slot, Phase.FIT))
            synth = gen.sample(m, make_rng(seed, n, run, slot, Phase.DEFAULT_SAMPLE))
        except (SynthDebiasError, ValueError, np.linalg.LinAlgError) as exc:
            for e in config.estimands:
                records += _failed(base(e, "default"), config.methods, m, "GeneratorFailed", exc)
                if str(e) in config.debias:
                    records += _failed(base(e, "debiased"), config.methods, m, "GeneratorFailed", exc)
            continue
        if config.quality:
            quality.append(QualityRecord(n, label, run, ikld(original, synth), count_exact_copies(original, synth)))
        for j, e in enumerate(config.estimands):
            nuis = make_rng(seed, n, run, slot, Phase.NUISANCE, 2 * j)
            records += _analyse(synth, e, n, "default", config.methods, config.nuisance_folds, nuis, base(e, "default"))
        for j, e in enumerate(config.estimands):
            if str(e) not in config.debias:
                continue
            cal = make_rng(seed, n, run, slot, Phase.DEBIAS_CALIBRATION, j)
            try:
                if config.split_folds:
                    wrapper, _ = debias_split(
                        spec, gen, original, e, config.split_folds, config.k_large, config.k_cond, cal, config.strict
                    )
                else:
                    wrapper, _ = debias(
                        gen, original, e, config.k_large, config.k_cond, cal, config.strict, check_residual=False
                    )
                deb = wrapper.sample(m, make_rng(seed, n, run, slot, Phase.DEBIAS_SAMPLE, j))
            except (SynthDebiasError, ValueError, np.linalg.LinAlgError) as exc:
                records += _failed(base(e, "debiased"), config.methods, m, "DebiasFailed", exc)
                continue
            nuis = make_rng(seed, n, run, slot, Phase.NUISANCE, 2 * j + 1)
            records += _analyse(deb, e, n, "debiased", config.methods, config.nuisance_folds, nuis, base(e, "debiased"))
    return records, quality


@dataclass
class CellSummary:
    n: int
    generator: str
    data_kind: str
    estimand: str
    se_method: str
    truth: float
    n_valid: int
    n_failed: int
    mean_estimate: float
    bias: float
    empirical_se: float
    avg_model_se: float
    coverage: float
    mean_ci_width: float

    @property
    def cell(self):
        return (self.n, self.generator, self.data_kind, self.estimand, self.se_method)

    def to_dict(self):
        return asdict(self)


CELL_FIELDS = tuple(f.name for f in fields(CellSummary))


@dataclass
class PowerLawFit:
    a: float
    a_ci: tuple
    log_c: float
    points: int

    def to_dict(self):
        return {"a": self.a, "a_low": self.a_ci[0], "a_high": self.a_ci[1], "log_c": self.log_c, "points": self.points}


def fit_power_law(n_values, emp_ses, level=0.95):
    """Fit ``SE = c * n ** -a`` by least squares on the log-log scale.

    The interval for ``a`` is the classical OLS t-interval with
    ``points - 2`` degrees of freedom (zero width for exact fits; undefined
    with three points only when residuals vanish, never NaN).
    """
    x = np.asarray(n_values, dtype=np.float64)
    y = np.asarray(emp_ses, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("n_values and emp_ses must be equal-length vectors")
    if x.size < 3:
        raise ValueError(f"need at least 3 points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError("n values and SEs must be positive and finite")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ValueError("need at least two distinct n values")
    xc = lx - lx.mean()
    sxx = float(xc @ xc)
    slope = float(xc @ (ly - ly.mean()) / sxx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - intercept - slope * lx
    dof = x.size - 2
    s2 = float(resid @ resid) / dof
    half = float(stats.t.ppf(0.5 + level / 2, dof)) * math.sqrt(s2 / sxx)
    a = -slope
    return PowerLawFit(a, (a - half, a + half), intercept, int(x.size))


def summarize(records):
    """Per-cell aggregates over valid runs, sorted by cell key."""
    groups = {}
    for r in records:
        groups.setdefault(r.cell, []).append(r)
    out = []
    for cell in sorted(groups):
        rs = groups[cell]
        ok = [r for r in rs if r.valid]
        est = np.array([r.theta for r in ok])
        se = np.array([r.se for r in ok])
        width = np.array([r.ci_high - r.ci_low for r in ok])
        nv = len(ok)
        mean_est = float(est.mean()) if nv else math.nan
        out.append(
            CellSummary(
                *cell,
                truth=rs[0].truth,
                n_valid=nv,
                n_failed=len(rs) - nv,
                mean_estimate=mean_est,
                bias=mean_est - rs[0].truth,
                empirical_se=float(est.std(ddof=1)) if nv > 1 else math.nan,
                avg_model_se=float(se.mean()) if nv else math.nan,
                coverage=float(np.mean([r.covered for r in ok])) if nv else math.nan,
                mean_ci_width=float(width.mean()) if nv else math.nan,
            )
        )
    return out


def power_laws(cells):
    """Power-law fit of empirical SE over n per (generator, data_kind, estimand, method)."""
    series = {}
    for c in cells:
        if np.isfinite(c.empirical_se) and c.empirical_se > 0:
            series.setdefault(c.cell[1:], []).append((c.n, c.empirical_se))
    out = {}
    for key in sorted(series):
        pts = sorted(series[key])
        if len(pts) >= 3:
            ns, ses = zip(*pts)
            out[key] = fit_power_law(ns, ses)
    return out


def type1_error(records, null_value, alpha=0.05):
    """Share of valid runs whose interval excludes ``null_value``.

    ``alpha`` is the nominal level of the intervals and is only checked
    against the 95% intervals the harness produces.
    """
    if not math.isclose(alpha, 0.05):
        raise ValueError("records carry 95% intervals; alpha must be 0.05")
    ok = [r for r in records if r.valid]
    if not ok:
        raise ValueError("no valid runs")
    cells = {r.cell for r in ok}
    if len(cells) > 1:
        raise ValueError(f"records span {len(cells)} cells")
    return float(np.mean([not (r.ci_low <= null_value <= r.ci_high) for r in ok]))


@dataclass
class StudySummary:
    cells: list
    power_laws: dict
    quality: list = field(default_factory=list)

    def cell(self, n, generator, data_kind, estimand, se_method="MLE"):
        for c in self.cells:
            if c.cell == (n, generator, data_kind, str(estimand), se_method):
                return c
        raise KeyError((n, generator, data_kind, str(estimand), se_method))

    def power_law(self, generator, data_kind, estimand, se_method="MLE"):
        return self.power_laws[(generator, data_kind, str(estimand), se_method)]

    def to_dict(self):
        return {
            "cells": [c.to_dict() for c in self.cells],
            "power_laws": [
                {"generator": k[0], "data_kind": k[1], "estimand": k[2], "se_method": k[3], **v.to_dict()}
                for k, v in self.power_laws.items()
            ],
            "quality": self.quality,
        }


def summarize_quality(qrecords):
    groups = {}
    for q in qrecords:
        groups.setdefault((q.n, q.generator), []).append(q)
    return [
        {
            "n": k[0],
            "generator": k[1],
            "runs": len(v),
            "mean_ikld": float(np.mean([q.ikld for q in v])),
            "mean_exact_copies": float(np.mean([q.exact_copies for q in v])),
        }
        for k, v in sorted(groups.items())
    ]


def _task(config, truth, nr):
    return run_task(config, truth, *nr)


def run_study(config, workers=1):
    """Run every ``(n, run)`` task and aggregate.

    Returns ``(records, summary)`` with records sorted by their full key;
    ``workers`` only changes how tasks are scheduled.
    """
    truth = resolve_truth(config)
    tasks = [(n, r) for n in config.n_grid for r in range(config.runs)]
    fn = partial(_task, config, truth)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [fn(t) for t in tasks]
    records = sorted((r for rs, _ in results for r in rs), key=lambda r: r.key)
    qrecords = [q for _, qs in results for q in qs]
    cells = summarize(records)
    return records, StudySummary(cells, power_laws(cells), summarize_quality(qrecords))


def population_resample_study(population, config, workers=1):
    """Study whose original samples are drawn without replacement from ``population``."""
    if population.n_rows < max(config.n_grid):
        raise ConfigError(f"population has {population.n_rows} rows, fewer than max n {max(config.n_grid)}")
    kw = {f.name: getattr(config, f.name) for f in fields(config)}
    kw["population"] = population
    return run_study(StudyConfig(**kw), workers)
