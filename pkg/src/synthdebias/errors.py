"""Exception types raised across the package."""


class SynthDebiasError(Exception):
    """Base class for all package errors."""


class SchemaError(SynthDebiasError, ValueError):
    """A table, column or schema violates its declared structure."""


class ConfigError(SynthDebiasError, ValueError):
    """A configuration file or option failed validation."""


class ConditionTooRare(SynthDebiasError):
    """Rejection sampling exhausted its draw budget before collecting enough rows.

    Attributes
    ----------
    assignment : dict
        The condition that could not be met.
    found, requested, draws : int
        Matching rows collected, rows requested and unconditional draws spent.
    """

    def __init__(self, assignment, found, requested, draws):
        self.assignment = dict(assignment)
        self.found = found
        self.requested = requested
        self.draws = draws
        cond = ", ".join(f"{k}={v}" for k, v in self.assignment.items())
        super().__init__(
            f"condition {{{cond}}} too rare: {found}/{requested} rows after {draws} draws"
        )


class StratumUnestimable(SynthDebiasError):
    """A row's covariate stratum has no training rows for nuisance estimation."""


class UnseenStratum(SynthDebiasError):
    """A sampled row falls in a stratum without a stored conditional mean."""


class DegenerateExposure(SynthDebiasError):
    """The exposure has no variation left after removing its stratum means."""


class EmptyArm(SynthDebiasError):
    """One arm of a two-arm comparison has no rows."""
