"""Pluggable generators, shift wrappers and conditional sampling."""

from dataclasses import dataclass

from synthdebias.errors import ConfigError
from synthdebias.generators.base import FittedGenerator, conditional_sample_rejection
from synthdebias.generators.bootstrap import SmoothedBootstrap
from synthdebias.generators.copula import GaussianCopula
from synthdebias.generators.parametric import ParametricGenerator
from synthdebias.generators.shifted import (
    MeanShiftedGenerator,
    PerArmShiftedGenerator,
    RegressionShiftedGenerator,
)

__all__ = [
    "FittedGenerator",
    "GaussianCopula",
    "GeneratorSpec",
    "MeanShiftedGenerator",
    "ParametricGenerator",
    "PerArmShiftedGenerator",
    "RegressionShiftedGenerator",
    "SmoothedBootstrap",
    "conditional_sample_rejection",
    "fit_generator",
    "parse_generator",
    "sample",
    "sample_conditional",
]

KINDS = ("parametric", "smoothed_bootstrap", "gaussian_copula")


@dataclass(frozen=True)
class GeneratorSpec:
    """Which generator to fit.

    ``bandwidth_rule`` and ``fit_noise`` only apply to ``smoothed_bootstrap``.
    """

    kind: str = "parametric"
    bandwidth_rule: float = 3.0
    fit_noise: float = 0.35

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator {self.kind!r}; expected one of {KINDS}")
        if self.bandwidth_rule < 0 or self.fit_noise < 0:
            raise ConfigError("bandwidth_rule and fit_noise must be non-negative")

    @property
    def label(self):
        if self.kind == "smoothed_bootstrap":
            return f"smoothed_bootstrap(bw={self.bandwidth_rule:g},noise={self.fit_noise:g})"
        return self.kind

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "smoothed_bootstrap":
            d.update(bandwidth_rule=self.bandwidth_rule, fit_noise=self.fit_noise)
        return d


def parse_generator(text):
    """Parse ``parametric``, ``copula``, ``bootstrap[:bw[:noise]]`` style strings."""
    parts = str(text).strip().split(":")
    name = parts[0].lower()
    alias = {"bootstrap": "smoothed_bootstrap", "copula": "gaussian_copula"}
    name = alias.get(name, name)
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError:
        raise ConfigError(f"bad generator spec {text!r}") from None
    if name != "smoothed_bootstrap" and nums:
        raise ConfigError(f"generator {name!r} takes no parameters")
    if len(nums) > 2:
        raise ConfigError(f"bad generator spec {text!r}")
    kw = dict(zip(("bandwidth_rule", "fit_noise"), nums))
    return GeneratorSpec(name, **kw)


def fit_generator(spec, train, rng):
    if train.n_rows == 0:
        raise ValueError("cannot fit a generator on an empty table")
    if spec.kind == "parametric":
        return ParametricGenerator(train, rng)
    if spec.kind == "smoothed_bootstrap":
        return SmoothedBootstrap(train, rng, spec.bandwidth_rule, spec.fit_noise)
    return GaussianCopula(train, rng)


def sample(gen, m, rng):
    return gen.sample(m, rng)


def sample_conditional(gen, assignment, m, rng, batch=None, max_draws=None, method="auto"):
    """Conditional draw: the generator's direct sampler when it has one, else rejection."""
    if method == "rejection" or (method == "auto" and not gen.supports_conditional):
        return conditional_sample_rejection(gen, assignment, m, rng, batch, max_draws)
    return gen.conditional_sample(assignment, m, rng, batch, max_draws)
