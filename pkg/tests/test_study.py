import csv
import math

import numpy as np
import pytest

from synthdebias.errors import ConfigError
from synthdebias.estimators import LinCoef, Mean, RiskDifference
from synthdebias.generators import GeneratorSpec
from synthdebias.outputs import CONVERGENCE_FIELDS, write_study
from synthdebias.streams import make_rng
from synthdebias.study import (
    CELL_FIELDS,
    RUN_FIELDS,
    RunRecord,
    StudyConfig,
    fit_power_law,
    population_resample_study,
    run_study,
    type1_error,
)
from synthdebias.table import ColumnKind, Schema, Table

GRID = (50, 160, 500, 1600, 5000)


def small_config(**kw):
    base = dict(
        n_grid=(40, 80, 120),
        runs=3,
        generators=(GeneratorSpec("parametric"), GeneratorSpec("smoothed_bootstrap")),
        estimands=(Mean("age"), LinCoef("bp", "therapy", ("stage",))),
        k_large=10_000,
        k_cond=500,
        nuisance_folds=2,
        seed=5,
    )
    base.update(kw)
    return StudyConfig(**base)


@pytest.fixture(scope="module")
def study():
    return run_study(small_config(quality=True))


def test_power_law_exact_root_n():
    fit = fit_power_law(GRID, [3.0 * n**-0.5 for n in GRID])
    assert abs(fit.a - 0.5) < 1e-12
    assert fit.a_ci[1] - fit.a_ci[0] < 1e-10
    assert fit.log_c == pytest.approx(math.log(3.0))
    assert fit_power_law(GRID, [2.0] * 5).a == pytest.approx(0.0, abs=1e-12)


def test_power_law_ci_matches_t_interval():
    from scipy import stats

    rng = make_rng(1)
    ses = [n**-0.4 * math.exp(rng.normal(0, 0.1)) for n in GRID]
    fit = fit_power_law(GRID, ses)
    res = stats.linregress(np.log(GRID), np.log(ses))
    half = stats.t.ppf(0.975, 3) * res.stderr
    assert fit.a == pytest.approx(-res.slope, abs=1e-12)
    assert fit.a_ci == pytest.approx((-res.slope - half, -res.slope + half), abs=1e-12)
    assert fit.a_ci[0] <= fit.a <= fit.a_ci[1]


def test_power_law_errors():
    with pytest.raises(ValueError):
        fit_power_law([1, 2], [1, 1])
    with pytest.raises(ValueError):
        fit_power_law([1, 2, 3], [1, 0, 1])
    with pytest.raises(ValueError):
        fit_power_law([5, 5, 5], [1, 2, 3])


def rec(ci, valid=True, run=0):
    r = RunRecord(50, "g", "default", "mean:x", "MLE", run, 50, 0.0, ci_low=ci[0], ci_high=ci[1])
    if not valid:
        r.failure = "NonEstimable"
    return r


def test_type1_error_examples():
    assert type1_error([rec((-1, 1), run=i) for i in range(4)], 0.0) == 0.0
    assert type1_error([rec((1, 2), run=i) for i in range(4)], 0.0) == 1.0
    mixed = [rec((1, 2), run=0), rec((-1, 1), run=1), rec((5, 6), valid=False, run=2)]
    assert type1_error(mixed, 0.0) == 0.5
    with pytest.raises(ValueError):
        type1_error([rec((1, 2), valid=False)], 0.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        StudyConfig(n_grid=(160, 50))
    with pytest.raises(ConfigError):
        StudyConfig(runs=1)
    with pytest.raises(ConfigError):
        StudyConfig(estimands=(Mean("nope"),))
    with pytest.raises(ConfigError):
        StudyConfig(estimands=(Mean("bp"),), debias=("mean:age",))
    with pytest.raises(ConfigError):
        StudyConfig(k_large=100)
    with pytest.raises(ConfigError):
        run_study(StudyConfig(estimands=(Mean("bp"),), n_grid=(50,), runs=2))


def test_record_structure(study):
    records, summary = study
    cfg = small_config()
    # original: 2 estimands; per generator: default + debiased for both estimands; 2 methods each
    per_run = (2 + 2 * 2 * 2) * 2
    assert len(records) == per_run * 3 * 3
    assert records == sorted(records, key=lambda r: r.key)
    for r in records:
        assert (r.failure == "") == (r.covered is not None)
    orig = [r for r in records if r.data_kind == "original" and r.valid]
    assert all(r.se_mle_corrected == r.se_mle for r in orig)
    synth = [r for r in records if r.data_kind != "original" and r.valid]
    assert all(r.se_mle_corrected == pytest.approx(math.sqrt(1 + r.m / r.n) * r.se_mle) for r in synth)
    assert any(r.m == r.n for r in synth)
    assert {q["generator"] for q in summary.quality} == {g.label for g in cfg.generators}


def test_smoke_two_runs():
    records, summary = run_study(small_config(n_grid=(50,), runs=2, generators=(GeneratorSpec("parametric"),)))
    c = summary.cell(50, "parametric", "debiased", "mean:age")
    vals = [r.theta for r in records if r.cell == c.cell]
    assert c.n_valid == 2 and c.empirical_se == pytest.approx(np.std(vals, ddof=1))


def test_streaming_aggregation_matches(study):
    records, summary = study
    acc = {}
    for r in records:
        a = acc.setdefault(r.cell, {"k": 0, "mean": 0.0, "m2": 0.0, "cov": 0, "se": 0.0, "fail": 0})
        if not r.valid:
            a["fail"] += 1
            continue
        a["k"] += 1
        d = r.theta - a["mean"]
        a["mean"] += d / a["k"]
        a["m2"] += d * (r.theta - a["mean"])
        a["cov"] += r.covered
        a["se"] += r.se
    for c in summary.cells:
        a = acc[c.cell]
        assert c.n_valid == a["k"] and c.n_failed == a["fail"]
        if a["k"] > 1:
            assert c.mean_estimate == pytest.approx(a["mean"], abs=1e-12, rel=1e-12)
            assert c.empirical_se == pytest.approx(math.sqrt(a["m2"] / (a["k"] - 1)), rel=1e-10)
            assert c.coverage == pytest.approx(a["cov"] / a["k"], abs=1e-12)
            assert c.avg_model_se == pytest.approx(a["se"] / a["k"], rel=1e-12)


def test_power_laws_in_summary(study):
    _, summary = study
    fit = summary.power_law("parametric", "debiased", "mean:age")
    assert fit.points == 3


def test_worker_count_does_not_change_records():
    cfg = small_config(n_grid=(40, 60), runs=2, estimands=(Mean("age"),))
    r1, _ = run_study(cfg, workers=1)
    r2, _ = run_study(cfg, workers=2)
    assert [x.to_dict() for x in r1] == [x.to_dict() for x in r2]


def test_population_mode_full_sample_equals_truth():
    schema = Schema((("y", ColumnKind.continuous()), ("arm", ColumnKind.binary())))
    rng = make_rng(3)
    pop = Table(schema, {"y": rng.normal(size=60), "arm": np.arange(60) % 2})
    cfg = StudyConfig(
        population=pop,
        n_grid=(30, 60),
        runs=2,
        generators=(GeneratorSpec("gaussian_copula"),),
        estimands=(Mean("y"), RiskDifference("y", "arm")),
        k_large=10_000,
        methods=("MLE",),
    )
    records, summary = population_resample_study(pop, cfg)
    full = [r for r in records if r.n == 60 and r.data_kind == "original" and r.estimand == "mean:y"]
    assert all(r.theta == pytest.approx(r.truth, abs=1e-15) for r in full)
    assert full[0].truth == pytest.approx(pop.column("y").mean())
    with pytest.raises(ConfigError):
        population_resample_study(pop.head(40), cfg)


def test_output_headers(tmp_path, study):
    records, summary = study
    write_study(tmp_path, small_config(quality=True), records, summary, "t0", "0.1.0")
    with open(tmp_path / "runs.csv") as fh:
        header = next(csv.reader(fh))
    assert tuple(header) == RUN_FIELDS == (
        "n", "generator", "data_kind", "estimand", "se_method", "run", "m", "truth", "theta", "se",
        "se_mle", "se_mle_corrected", "se_eic", "ci_low", "ci_high", "covered", "failure", "detail",
    )
    with open(tmp_path / "summary.csv") as fh:
        assert tuple(next(csv.reader(fh))) == CELL_FIELDS == (
            "n", "generator", "data_kind", "estimand", "se_method", "truth", "n_valid", "n_failed",
            "mean_estimate", "bias", "empirical_se", "avg_model_se", "coverage", "mean_ci_width",
        )
    with open(tmp_path / "convergence.csv") as fh:
        assert tuple(next(csv.reader(fh))) == CONVERGENCE_FIELDS
    import hashlib
    import json

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for f in manifest["files"]:
        assert hashlib.sha256((tmp_path / f["name"]).read_bytes()).hexdigest() == f["sha256"]
    summary_json = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary_json) == {"config", "cells", "power_laws", "quality"}
