"""YAML study configuration.

Grammar (every key optional except where a default cannot apply)::

    seed: 20240601
    runs: 250
    n_grid: [50, 160, 500, 1600, 5000]
    m: n                          # or a fixed synthetic size, e.g. 1000000
    generators:                   # strings or mappings
      - parametric
      - gaussian_copula
      - kind: smoothed_bootstrap
        bandwidth_rule: 3
        fit_noise: 0.35
    estimands: ["mean:age", "lincoef:bp~therapy|stage"]
    debias: ["mean:age"]          # default: every estimand
    methods: [MLE, EIC]
    nuisance_folds: 5
    k_large: 100000
    k_cond: 20000
    split_folds: 0                # >= 2 enables sample splitting in debiasing
    strict: false                 # rare strata raise instead of falling back
    quality: false
    dgp: {beta_therapy: -20}      # overrides of the simulation constants
    population:                   # resample a finite population instead
      data: population.csv        # paths relative to the config file,
      schema: population.yaml     # or `population: bundled`
    truth: {"rd:death~aspirin": -0.009}

Errors are raised as :class:`ConfigError` naming the field path and, when
known, the line of the offending entry.
"""

from dataclasses import fields
from pathlib import Path

import yaml

from synthdebias.dgp import DgpParams
from synthdebias.errors import ConfigError, SchemaError
from synthdebias.estimators import parse_estimand
from synthdebias.generators import GeneratorSpec, parse_generator
from synthdebias.io import load_schema, read_csv
from synthdebias.study import StudyConfig

DATA_DIR = Path(__file__).parent / "data"
BUNDLED_POPULATION = (DATA_DIR / "trial_population.csv", DATA_DIR / "trial_population.yaml")

_SCALARS = {
    "seed": int,
    "runs": int,
    "nuisance_folds": int,
    "k_large": int,
    "k_cond": int,
    "split_folds": int,
    "strict": bool,
    "quality": bool,
}
_KNOWN = set(_SCALARS) | {"n_grid", "m", "generators", "estimands", "debias", "methods", "dgp", "population", "truth"}


def _line_of(node, path):
    """1-based line of ``path`` inside a composed YAML node, or None."""
    for part in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == part:
                    nxt = v
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
        else:
            node = None
        if node is None:
            return None
    return node.start_mark.line + 1


class _Ctx:
    def __init__(self, source, node):
        self.source = source
        self.node = node

    def error(self, path, msg):
        where = ".".join(str(p) if isinstance(p, str) else f"[{p}]" for p in path).replace(".[", "[")
        line = _line_of(self.node, path) if self.node is not None else None
        loc = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{loc}: {where}: {msg}")


def _scalar(ctx, key, value, typ):
    if typ is bool:
        if not isinstance(value, bool):
            raise ctx.error([key], f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, int):
        raise ctx.error([key], f"expected an integer, got {value!r}")
    return value


def _generator(ctx, i, entry):
    try:
        if isinstance(entry, str):
            return parse_generator(entry)
        if isinstance(entry, dict):
            kind = parse_generator(str(entry.get("kind", ""))).kind
            extra = set(entry) - {"kind", "bandwidth_rule", "fit_noise"}
            if extra:
                raise ConfigError(f"unknown keys {sorted(extra)}")
            kw = {k: float(entry[k]) for k in ("bandwidth_rule", "fit_noise") if k in entry}
            if kw and kind != "smoothed_bootstrap":
                raise ConfigError(f"{kind} takes no parameters")
            return GeneratorSpec(kind, **kw)
        raise ConfigError(f"expected a string or mapping, got {entry!r}")
    except (ConfigError, TypeError, ValueError) as exc:
        raise ctx.error(["generators", i], str(exc)) from None


def _string_list(ctx, key, value):
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ctx.error([key], "expected a list of strings")
    return value


def _population(ctx, value, base_dir):
    if value == "bundled":
        data, schema = BUNDLED_POPULATION
    elif isinstance(value, dict) and {"data", "schema"} <= set(value):
        data, schema = (base_dir / str(value[k]) for k in ("data", "schema"))
    else:
        raise ctx.error(["population"], "expected 'bundled' or a mapping with 'data' and 'schema'")
    try:
        return read_csv(data, load_schema(schema))
    except OSError as exc:
        raise ctx.error(["population"], f"cannot read {exc.filename}: {exc.strerror}") from None
    except SchemaError as exc:
        raise ctx.error(["population"], str(exc)) from None


def config_from_dict(obj, source="<config>", node=None, base_dir=Path("."), overrides=None):
    """Validate a parsed mapping into a :class:`StudyConfig`."""
    ctx = _Ctx(source, node)
    if obj is None:
        obj = {}
    if not isinstance(obj, dict):
        raise ctx.error([], "top level must be a mapping")
    obj = {**obj, **(overrides or {})}
    unknown = set(obj) - _KNOWN
    if unknown:
        key = sorted(unknown)[0]
        raise ctx.error([key], f"unknown key (allowed: {sorted(_KNOWN)})")
    kw = {}
    for key, typ in _SCALARS.items():
        if key in obj:
            kw[key] = _scalar(ctx, key, obj[key], typ)
    if "n_grid" in obj:
        grid = obj["n_grid"]
        if not isinstance(grid, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in grid):
            raise ctx.error(["n_grid"], "expected a list of integers")
        kw["n_grid"] = tuple(grid)
    if "m" in obj:
        m = obj["m"]
        if m == "n":
            kw["m"] = None
        elif isinstance(m, int) and not isinstance(m, bool):
            kw["m"] = m
        else:
            raise ctx.error(["m"], f"expected 'n' or an integer, got {m!r}")
    if "generators" in obj:
        gens = obj["generators"]
        if not isinstance(gens, list):
            raise ctx.error(["generators"], "expected a list")
        kw["generators"] = tuple(_generator(ctx, i, g) for i, g in enumerate(gens))
    if "estimands" in obj:
        items = _string_list(ctx, "estimands", obj["estimands"])
        parsed = []
        for i, text in enumerate(items):
            try:
                parsed.append(parse_estimand(text))
            except ConfigError as exc:
                raise ctx.error(["estimands", i], str(exc)) from None
        kw["estimands"] = tuple(parsed)
    if "debias" in obj:
        items = _string_list(ctx, "debias", obj["debias"])
        try:
            kw["debias"] = tuple(str(parse_estimand(t)) for t in items)
        except ConfigError as exc:
            raise ctx.error(["debias"], str(exc)) from None
    if "methods" in obj:
        kw["methods"] = tuple(m.upper() for m in _string_list(ctx, "methods", obj["methods"]))
    if "dgp" in obj:
        dgp = obj["dgp"]
        allowed = {f.name for f in fields(DgpParams)}
        if not isinstance(dgp, dict) or set(dgp) - allowed:
            raise ctx.error(["dgp"], f"expected a mapping with keys from {sorted(allowed)}")
        try:
            kw["dgp"] = DgpParams(**dgp)
        except (ConfigError, TypeError, ValueError) as exc:
            raise ctx.error(["dgp"], str(exc)) from None
    if "population" in obj and obj["population"] is not None:
        kw["population"] = _population(ctx, obj["population"], base_dir)
    if "truth" in obj:
        truth = obj["truth"]
        if not isinstance(truth, dict) or not all(isinstance(v, (int, float)) for v in truth.values()):
            raise ctx.error(["truth"], "expected a mapping of estimand to number")
        try:
            kw["truth"] = {str(parse_estimand(k)): float(v) for k, v in truth.items()}
        except ConfigError as exc:
            raise ctx.error(["truth"], str(exc)) from None
    try:
        return StudyConfig(**kw)
    except ConfigError as exc:
        msg = str(exc)
        head = msg.split(" ", 1)[0].rstrip(":")
        raise ctx.error([head] if head in _KNOWN else [], msg) from None


def load_config(path, overrides=None):
    """Read and validate a YAML study configuration file."""
    path = Path(path)
    text = path.read_text()
    try:
        node = yaml.compose(text)
        obj = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(obj, str(path), node, path.parent, overrides)
