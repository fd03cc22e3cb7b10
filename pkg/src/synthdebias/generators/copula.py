"""Gaussian copula with empirical marginals."""

import warnings

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import rankdata

from synthdebias import streams
from synthdebias.generators.base import FittedGenerator
from synthdebias.table import Table


def _nearest_correlation(c):
    vals, vecs = np.linalg.eigh(c)
    if vals.min() > 1e-10:
        return c
    vals = np.clip(vals, 1e-10, None)
    c = (vecs * vals) @ vecs.T
    d = np.sqrt(np.diag(c))
    return c / np.outer(d, d)


class GaussianCopula(FittedGenerator):
    """Joint normal scores with per-column empirical CDFs.

    Continuous columns get rank-based scores ``ndtri(rank / (n + 1))``;
    discrete columns get the score of their level's mid-CDF. Sampling maps
    correlated normals back through each empirical quantile function (linear
    interpolation for continuous columns, level thresholds for discrete ones).
    Columns without variation are sampled independently of the rest.
    """

    def __init__(self, train, rng=None):
        if train.n_rows == 0:
            raise ValueError("cannot fit a generator on an empty table")
        super().__init__(train.schema, train.n_rows)
        n = train.n_rows
        self._marginals = {}
        scores = []
        degenerate = []
        for j, (name, kind) in enumerate(self.schema.columns):
            col = train.column(name)
            if kind.is_discrete:
                counts = np.bincount(col, minlength=kind.n_levels).astype(float)
                cum = np.cumsum(counts) / n
                self._marginals[name] = cum
                mid = cum - counts / (2 * n)
                z = ndtri(np.clip(mid[col], 1e-12, 1 - 1e-12))
            else:
                self._marginals[name] = np.sort(col)
                z = ndtri(rankdata(col) / (n + 1))
            if n < 2 or np.ptp(z) == 0:
                degenerate.append(j)
            scores.append(z)
        k = len(scores)
        if n >= 2:
            with np.errstate(invalid="ignore", divide="ignore"):
                corr = np.corrcoef(np.column_stack(scores), rowvar=False).reshape(k, k)
            corr = np.nan_to_num(corr)
        else:
            corr = np.eye(k)
        for j in degenerate:
            corr[j, :] = 0.0
            corr[:, j] = 0.0
        np.fill_diagonal(corr, 1.0)
        if degenerate:
            names = [self.schema.names[j] for j in degenerate]
            warnings.warn(f"columns without variation sampled independently: {names}", stacklevel=2)
        self.correlation = _nearest_correlation(corr)
        self._chol = np.linalg.cholesky(self.correlation)

    def sample(self, m, rng):
        m = self._check_m(m)
        k = len(self.schema)
        z = streams.normal(rng, (m, k)) @ self._chol.T
        u = ndtr(z)
        data = {}
        for j, (name, kind) in enumerate(self.schema.columns):
            marg = self._marginals[name]
            if kind.is_discrete:
                idx = np.searchsorted(marg, u[:, j], side="left")
                data[name] = np.minimum(idx, kind.n_levels - 1)
            else:
                n = marg.size
                grid = np.arange(1, n + 1) / (n + 1)
                data[name] = np.interp(u[:, j], grid, marg)
        return Table(self.schema, data)
