"""Generator interface and rejection-based conditional sampling."""

from abc import ABC, abstractmethod

import numpy as np

from synthdebias.errors import ConditionTooRare
from synthdebias.table import Table, concat, condition_mask, resolve_assignment


class FittedGenerator(ABC):
    """A sampler fit to a training table.

    Subclasses implement :meth:`sample`. Conditional sampling falls back to
    rejection unless a subclass sets ``supports_conditional`` and overrides
    :meth:`conditional_sample`.
    """

    supports_conditional = False

    def __init__(self, schema, train_n):
        self.schema = schema
        self.train_n = int(train_n)

    @abstractmethod
    def sample(self, m, rng):
        """Draw ``m`` rows."""

    def conditional_sample(self, assignment, m, rng, batch=None, max_draws=None):
        """Draw ``m`` rows that satisfy ``assignment``."""
        return conditional_sample_rejection(self, assignment, m, rng, batch, max_draws)

    def _check_m(self, m):
        m = int(m)
        if m < 0:
            raise ValueError("m must be non-negative")
        return m


def conditional_sample_rejection(gen, assignment, m, rng, batch=None, max_draws=None):
    """Collect ``m`` rows matching ``assignment`` from unconditional batches.

    Parameters
    ----------
    batch : int, optional
        Unconditional rows per round (default ``10 * m``).
    max_draws : int, optional
        Budget of unconditional rows (default ``1000 * m``). Exhausting it
        raises :class:`ConditionTooRare`.
    """
    m = int(m)
    if m < 1:
        raise ValueError("conditional sampling needs m >= 1")
    resolve_assignment(gen.schema, assignment)
    batch = int(batch or 10 * m)
    max_draws = int(max_draws or 1000 * m)
    parts, found, drawn = [], 0, 0
    while found < m:
        size = min(batch, max_draws - drawn)
        if size <= 0:
            raise ConditionTooRare(assignment, found, m, drawn)
        t = gen.sample(size, rng)
        drawn += size
        mask = condition_mask(t, assignment)
        hits = int(mask.sum())
        if hits:
            parts.append(t.take(np.flatnonzero(mask)[: m - found]))
            found += min(hits, m - found)
    return parts[0] if len(parts) == 1 else concat(parts)
