"""Oversmoothed kernel bootstrap.

Rows are resampled from the training table and every continuous column gets
Gaussian kernel noise of bandwidth

    h_j = bandwidth_rule * 1.06 * sd_j * n ** (-1/5)

with discrete columns carried along with their row.

A plain smoothed bootstrap is unbiased for means and within-cell contrasts,
so on its own it converges at the root-n rate. To behave like a deep
generative model, whose fitted distribution carries a random regularisation
error that vanishes more slowly than root-n, each fit also draws
``fit_noise``-scaled training noise that decays at the kernel rate:

* a location offset ``fit_noise * h_j * Z`` per discrete cell (joint level
  of all discrete columns) and continuous column;
* a log-weight tilt ``fit_noise * bandwidth_rule * 1.06 * n ** (-1/5) * Z``
  per discrete cell, applied to the resampling weights.

``fit_noise=0`` recovers the ordinary smoothed bootstrap, and
``bandwidth_rule=0`` the ordinary bootstrap.
"""

import numpy as np

from synthdebias import streams
from synthdebias.generators.base import FittedGenerator
from synthdebias.table import Table, stratum_codes


class SmoothedBootstrap(FittedGenerator):
    def __init__(self, train, rng, bandwidth_rule=3.0, fit_noise=0.35):
        if train.n_rows == 0:
            raise ValueError("cannot fit a generator on an empty table")
        if bandwidth_rule < 0 or fit_noise < 0:
            raise ValueError("bandwidth_rule and fit_noise must be non-negative")
        super().__init__(train.schema, train.n_rows)
        n = train.n_rows
        self.bandwidth_rule = float(bandwidth_rule)
        self.fit_noise = float(fit_noise)
        self._train = train
        self._continuous = train.schema.continuous_names()
        rate = self.bandwidth_rule * 1.06 * n ** (-0.2)
        self.bandwidths = {}
        for name in self._continuous:
            sd = float(np.std(train.column(name), ddof=1)) if n > 1 else 0.0
            self.bandwidths[name] = rate * sd

        cells, keys = stratum_codes(train, train.schema.discrete_names())
        self._cells = cells
        n_cells = len(keys)
        self.offsets = {
            name: self.fit_noise * self.bandwidths[name] * streams.normal(rng, n_cells)
            for name in self._continuous
        }
        tilt = self.fit_noise * rate * streams.normal(rng, n_cells)
        self.cell_tilts = tilt
        weights = np.exp(tilt - tilt.max())[cells]
        self._cum_weights = None if np.all(tilt == tilt[0]) else np.cumsum(weights)

    def anchor_values(self, name):
        """Training values of a continuous column plus their cell offsets."""
        return self._train.column(name) + self.offsets[name][self._cells]

    def row_weights(self):
        """Normalised resampling weights of the training rows."""
        if self._cum_weights is None:
            return np.full(self.train_n, 1.0 / self.train_n)
        w = np.diff(self._cum_weights, prepend=0.0)
        return w / w.sum()

    def sample(self, m, rng):
        m = self._check_m(m)
        if self._cum_weights is None:
            idx = rng.integers(0, self.train_n, size=m)
        else:
            idx = streams.weighted_index(rng, self._cum_weights, m)
        data = {}
        for name, kind in self.schema.columns:
            col = self._train.column(name)[idx]
            if not kind.is_discrete:
                col = col + self.offsets[name][self._cells[idx]]
                h = self.bandwidths[name]
                if h > 0:
                    col = col + streams.normal(rng, m, 0.0, h)
            data[name] = col
        return Table(self.schema, data)
