"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 validation error (config, schema,
estimand), 3 domain failure (rare or unseen stratum, empty arm, degenerate
exposure).
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from synthdebias import __version__, streams
from synthdebias.config import load_config
from synthdebias.debias import K_COND, K_LARGE, debias, debias_split
from synthdebias.errors import (
    ConditionTooRare,
    ConfigError,
    DegenerateExposure,
    EmptyArm,
    SchemaError,
    StratumUnestimable,
    UnseenStratum,
)
from synthdebias.estimators import LinCoef, check_estimand, estimate, parse_estimand
from synthdebias.generators import fit_generator, parse_generator
from synthdebias.inference import make_report
from synthdebias.io import dump_schema, load_schema, read_csv, write_csv
from synthdebias.outputs import now, write_json, write_study
from synthdebias.quality import quality_report
from synthdebias.study import fit_power_law, run_study

EXIT_IO, EXIT_VALIDATION, EXIT_DOMAIN = 1, 2, 3
DOMAIN_ERRORS = (ConditionTooRare, UnseenStratum, EmptyArm, DegenerateExposure, StratumUnestimable)


class Failure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    print(text)


def _load_table(data, schema):
    schema = load_schema(schema)
    return read_csv(data, schema)


def _estimand(text, schema):
    spec = parse_estimand(text)
    try:
        check_estimand(schema, spec)
    except KeyError as exc:
        raise SchemaError(f"estimand {spec}: unknown column {exc}") from None
    return spec


def cmd_simulate(args):
    overrides = {k: v for k, v in (("seed", args.seed), ("runs", args.runs)) if v is not None}
    config = load_config(args.config, overrides)
    started = now()
    records, summary = run_study(config, workers=args.threads)
    write_study(args.out, config, records, summary, started, __version__)
    failed = sum(not r.valid for r in records)
    print(f"{len(records)} records ({failed} failed), {len(summary.cells)} cells -> {args.out}")


def cmd_debias(args):
    original = _load_table(args.data, args.schema)
    spec = _estimand(args.estimand, original.schema)
    gspec = parse_generator(args.generator)
    m = args.m if args.m is not None else original.n_rows
    if m < 1:
        raise ConfigError("--m must be positive")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    key = streams.Phase
    gen = fit_generator(gspec, original, streams.make_rng(args.seed, 0, 0, 1, key.FIT))
    default = gen.sample(m, streams.make_rng(args.seed, 0, 0, 1, key.DEFAULT_SAMPLE))
    cal = streams.make_rng(args.seed, 0, 0, 1, key.DEBIAS_CALIBRATION)
    strict = not args.lenient
    if args.split_folds:
        wrapper, reports = debias_split(gspec, gen, original, spec, args.split_folds, args.k_large, args.k_cond, cal, strict)
    else:
        wrapper, reports = debias(gen, original, spec, args.k_large, args.k_cond, cal, strict, isinstance(spec, LinCoef))
    deb = wrapper.sample(m, streams.make_rng(args.seed, 0, 0, 1, key.DEBIAS_SAMPLE))
    write_csv(default, out / "default_synthetic.csv")
    write_csv(deb, out / "debiased_synthetic.csv")
    dump_schema(deb.schema, out / "debiased_schema.yaml")
    report = {
        "generator": gspec.to_dict(),
        "estimand": str(spec),
        "n": original.n_rows,
        "m": m,
        "seed": args.seed,
        "reports": [r.to_dict() for r in reports],
    }
    write_json(report, out / "debias_report.json")
    print(f"wrote default_synthetic.csv, debiased_synthetic.csv, debias_report.json -> {out}")


def cmd_analyze(args):
    table = _load_table(args.data, args.schema)
    spec = _estimand(args.estimand, table.schema)
    if args.kind != "original" and args.n is None:
        raise ConfigError(f"--n (original sample size) is required for --kind {args.kind}")
    n = args.n if args.n is not None else table.n_rows
    if n < 1:
        raise ConfigError("--n must be positive")
    folds = args.folds if args.method == "EIC" and isinstance(spec, LinCoef) else 1
    fit = estimate(table, spec, folds=folds, rng=streams.make_rng(args.seed), drop_unestimable=False)
    report = make_report(fit, spec, n, args.kind, se_method=args.method).to_dict()
    d = fit.diagnostics
    if "mean_1" in d:
        report["arms"] = {
            "1": {"proportion": d["mean_1"], "m": d["m_1"]},
            "0": {"proportion": d["mean_0"], "m": d["m_0"]},
        }
    _emit(report, args.json_out)


def cmd_quality(args):
    schema = load_schema(args.schema)
    original = read_csv(args.original, schema)
    synth_schema = load_schema(args.synthetic_schema) if args.synthetic_schema else schema
    synthetic = read_csv(args.synthetic, synth_schema)
    _emit(quality_report(original, synthetic, args.bins).to_dict(), args.json_out)


def _read_summary(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"n", "empirical_se"} <= set(rows[0]):
        raise SchemaError(f"{path}: needs columns 'n' and 'empirical_se'")
    return rows


def cmd_convergence(args):
    rows = _read_summary(args.summary)
    group_cols = [c for c in ("generator", "data_kind", "estimand", "se_method") if rows and c in rows[0]]
    filters = {"generator": args.generator, "data_kind": args.data_kind, "estimand": args.estimand, "se_method": args.se_method}
    groups = {}
    for r in rows:
        if any(v is not None and r.get(k) != v for k, v in filters.items()):
            continue
        if r["empirical_se"] == "":
            continue
        groups.setdefault(tuple(r[c] for c in group_cols), []).append((float(r["n"]), float(r["empirical_se"])))
    fits = []
    for key in sorted(groups):
        pts = sorted(groups[key])
        if len(pts) < 3:
            continue
        ns, ses = zip(*pts)
        try:
            fit = fit_power_law(ns, ses)
        except ValueError as exc:
            raise ConfigError(f"group {dict(zip(group_cols, key))}: {exc}") from None
        fits.append({**dict(zip(group_cols, key)), **fit.to_dict()})
    if not fits:
        raise ConfigError(f"{args.summary}: no series with at least 3 usable rows")
    _emit(fits if group_cols else fits[0], args.json_out)


def build_parser():
    p = argparse.ArgumentParser(prog="synthdebias", description="Debiased synthetic data and honest inference")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a Monte Carlo study from a YAML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threads", type=int, default=1, help="worker processes; never changes results")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--runs", type=int, help="override the config run count")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("debias", help="fit a generator, write default and debiased synthetic data")
    d.add_argument("--data", required=True)
    d.add_argument("--schema", required=True)
    d.add_argument("--generator", required=True, help="parametric | copula | bootstrap[:bw[:noise]]")
    d.add_argument("--estimand", required=True, help="mean:x | lincoef:y~a|x1,x2 | rd:y~arm")
    d.add_argument("--m", type=int, help="synthetic sample size (default: n)")
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--k-large", type=int, default=K_LARGE)
    d.add_argument("--k-cond", type=int, default=K_COND)
    d.add_argument("--split-folds", type=int, default=0, help="sample-split the shift over this many folds")
    d.add_argument("--lenient", action="store_true", help="fall back on rare strata instead of failing")
    d.set_defaults(func=cmd_debias)

    a = sub.add_parser("analyze", help="estimate with MLE and EIC standard errors")
    a.add_argument("--data", required=True)
    a.add_argument("--schema", required=True)
    a.add_argument("--estimand", required=True)
    a.add_argument("--kind", choices=("original", "default", "debiased"), default="original")
    a.add_argument("--n", type=int, help="original sample size (required for synthetic kinds)")
    a.add_argument("--method", choices=("MLE", "EIC"), default="MLE")
    a.add_argument("--folds", type=int, default=5, help="cross-fitting folds for the EIC regression")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--json-out")
    a.set_defaults(func=cmd_analyze)

    q = sub.add_parser("quality", help="marginal similarity score and exact-copy count")
    q.add_argument("--original", required=True)
    q.add_argument("--synthetic", required=True)
    q.add_argument("--schema", required=True)
    q.add_argument("--synthetic-schema", help="schema of the synthetic file if it differs (relaxed columns)")
    q.add_argument("--bins", type=int, default=10)
    q.add_argument("--json-out")
    q.set_defaults(func=cmd_quality)

    c = sub.add_parser("convergence", help="power-law fit of empirical SE against n")
    c.add_argument("--summary", required=True, help="CSV with columns n and empirical_se")
    c.add_argument("--generator")
    c.add_argument("--data-kind")
    c.add_argument("--estimand")
    c.add_argument("--se-method")
    c.add_argument("--json-out")
    c.set_defaults(func=cmd_convergence)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConfigError, SchemaError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
