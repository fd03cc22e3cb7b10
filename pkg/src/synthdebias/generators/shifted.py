"""Shift wrappers that turn a fitted generator into a debiased one."""

import numpy as np

from synthdebias.errors import SchemaError, UnseenStratum
from synthdebias.generators.base import FittedGenerator
from synthdebias.table import ColumnKind, key_labels, stratum_codes


def _relaxed(schema, column):
    """Schema with ``column`` relaxed to continuous (shifted binaries leave {0, 1})."""
    kind = schema.kind(column)
    if kind.kind.value == "continuous":
        return schema
    if kind.kind.value != "binary":
        raise SchemaError(f"cannot shift {kind.kind.value} column {column!r}")
    return schema.with_kind(column, ColumnKind.continuous())


class _Wrapper(FittedGenerator):
    def __init__(self, base, schema):
        super().__init__(schema, base.train_n)
        self.base = base
        self.supports_conditional = base.supports_conditional

    def _shift(self, table):
        raise NotImplementedError

    def sample(self, m, rng):
        return self._shift(self.base.sample(m, rng))

    def conditional_sample(self, assignment, m, rng, batch=None, max_draws=None):
        return self._shift(self.base.conditional_sample(assignment, m, rng, batch, max_draws))


class MeanShiftedGenerator(_Wrapper):
    """Adds a constant ``delta`` to one column of every sampled row."""

    def __init__(self, base, column, delta):
        super().__init__(base, _relaxed(base.schema, column))
        self.column = column
        self.delta = float(delta)

    def _shift(self, table):
        values = table.column(self.column) + self.delta
        return table.with_column(self.column, values, kind=self.schema.kind(self.column))


class PerArmShiftedGenerator(_Wrapper):
    """Adds ``deltas[arm]`` to the outcome of each sampled row."""

    def __init__(self, base, outcome, arm, deltas):
        super().__init__(base, _relaxed(base.schema, outcome))
        if not base.schema.kind(arm).is_discrete:
            raise SchemaError(f"arm column {arm!r} must be discrete")
        self.outcome = outcome
        self.arm = arm
        self.deltas = {int(k): float(v) for k, v in deltas.items()}

    def _shift(self, table):
        arms = table.column(self.arm)
        lookup = np.zeros(self.base.schema.kind(self.arm).n_levels)
        for level, d in self.deltas.items():
            lookup[level] = d
        values = table.column(self.outcome) + lookup[arms]
        return table.with_column(self.outcome, values, kind=self.schema.kind(self.outcome))


class RegressionShiftedGenerator(_Wrapper):
    """Adds ``b * (A - E(A | X))`` to the outcome of every sampled row.

    ``cond_mean_A`` maps covariate level-index tuples to the generator's
    conditional exposure mean. Rows in strata missing from the map raise
    :class:`UnseenStratum` when ``strict``; otherwise ``fallback_mean_A`` is
    used (see :meth:`count_unseen`).
    """

    def __init__(self, base, outcome, exposure, covariates, b, cond_mean_A, fallback_mean_A, strict=True):
        super().__init__(base, _relaxed(base.schema, outcome))
        self.outcome = outcome
        self.exposure = exposure
        self.covariates = tuple(covariates)
        self.b = float(b)
        self.cond_mean_A = {tuple(k): float(v) for k, v in cond_mean_A.items()}
        self.fallback_mean_A = float(fallback_mean_A)
        self.strict = strict

    def _lookup(self, table):
        codes, keys = stratum_codes(table, self.covariates)
        means = np.empty(len(keys))
        seen = np.ones(len(keys), dtype=bool)
        for i, key in enumerate(keys):
            if key in self.cond_mean_A:
                means[i] = self.cond_mean_A[key]
            else:
                seen[i] = False
                means[i] = self.fallback_mean_A
        return codes, keys, means, seen

    def count_unseen(self, table):
        """Rows of ``table`` whose stratum has no stored conditional mean."""
        codes, _, _, seen = self._lookup(table)
        return int((~seen[codes]).sum()) if table.n_rows else 0

    def _shift(self, table):
        if table.n_rows == 0:
            return table.with_column(self.outcome, table.column(self.outcome), kind=self.schema.kind(self.outcome))
        codes, keys, means, seen = self._lookup(table)
        if self.strict and not seen.all():
            bad = key_labels(table.schema, self.covariates, keys[int(np.flatnonzero(~seen)[0])])
            raise UnseenStratum(f"no conditional exposure mean for stratum {bad}")
        a = table.column(self.exposure).astype(np.float64)
        values = table.column(self.outcome) + self.b * (a - means[codes])
        return table.with_column(self.outcome, values, kind=self.schema.kind(self.outcome))
