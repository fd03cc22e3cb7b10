"""Sequential parametric generator.

Columns are modelled in schema order, each conditional on all earlier
columns through a linear predictor (standardised continuous parents plus
dummies for the observed levels of discrete parents):

==============  ==============================================
continuous      normal linear regression (MLE variance)
binary          logistic regression
ordinal         proportional-odds cumulative logit
categorical     multinomial logit
==============  ==============================================

For the (age, stage, therapy, bp) simulation schema this is the correctly
specified model: normal age, cumulative-logit stage given age, Bernoulli
therapy, and blood pressure linear in stage and therapy. Discrete models carry
a tiny ridge penalty (``RIDGE``) on slopes so that separated cells in small
samples give large but finite coefficients; levels absent from the training
data get probability zero.
"""

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, softmax

from synthdebias import streams
from synthdebias.errors import ConditionTooRare
from synthdebias.generators.base import FittedGenerator
from synthdebias.table import Kind, Table, resolve_assignment

RIDGE = 1e-3


class _Encoder:
    """Builds the parent design matrix for one column."""

    def __init__(self, train, parents):
        self.parts = []
        for name in parents:
            kind = train.schema.kind(name)
            col = train.column(name)
            if kind.is_discrete:
                observed = np.flatnonzero(np.bincount(col, minlength=kind.n_levels))
                self.parts.append((name, "disc", observed[1:]))
            else:
                sd = float(col.std()) or 1.0
                self.parts.append((name, "cont", (float(col.mean()), sd)))

    def __call__(self, cols, m):
        blocks = [np.ones((m, 1))]
        for name, how, info in self.parts:
            x = cols[name]
            if how == "cont":
                blocks.append(((x - info[0]) / info[1])[:, None])
            elif len(info):
                blocks.append((x[:, None] == info[None, :]).astype(float))
        return np.hstack(blocks)


def _fit_logistic(X, y):
    beta = np.zeros(X.shape[1])
    pen = np.full(X.shape[1], RIDGE)
    pen[0] = 0.0
    for _ in range(100):
        p = expit(X @ beta)
        grad = X.T @ (y - p) - pen * beta
        hess = (X * (p * (1 - p))[:, None]).T @ X + np.diag(pen) + 1e-12 * np.eye(len(beta))
        step = np.linalg.solve(hess, grad)
        beta = beta + step
        if np.max(np.abs(step)) < 1e-10:
            break
    return beta


class _Continuous:
    def __init__(self, X, y):
        self.coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        self.sigma = float(np.sqrt(np.mean((y - X @ self.coef) ** 2)))

    def sample(self, X, rng):
        return streams.normal(rng, X.shape[0], X @ self.coef, self.sigma)


class _Discrete:
    """Shared sampling for discrete column models exposing ``probs(X)``."""

    def sample(self, X, rng):
        return streams.categorical(rng, self.probs(X))


class _Binary(_Discrete):
    def __init__(self, X, y):
        share = y.mean()
        if share in (0.0, 1.0):
            self.const = share
        else:
            self.const = None
            self.coef = _fit_logistic(X, y.astype(float))

    def probs(self, X):
        p1 = np.full(X.shape[0], self.const) if self.const is not None else expit(X @ self.coef)
        return np.column_stack([1 - p1, p1])


class _Ordinal(_Discrete):
    """Proportional odds: P(Y <= k | x) = expit(alpha_k - x'beta)."""

    def __init__(self, X, y, n_levels):
        self.n_levels = n_levels
        self.observed = np.flatnonzero(np.bincount(y, minlength=n_levels))
        k = len(self.observed)
        Z = X[:, 1:]
        if k == 1:
            self.alpha = np.empty(0)
            self.beta = np.zeros(Z.shape[1])
            return
        yy = np.searchsorted(self.observed, y)
        cum = np.cumsum(np.bincount(yy, minlength=k))[:-1] / len(y)
        a0 = np.log(cum / (1 - cum))
        c0 = np.r_[a0[0], np.log(np.maximum(np.diff(a0), 1e-3))]
        p = Z.shape[1]

        def unpack(par):
            c = par[: k - 1]
            alpha = c[0] + np.r_[0.0, np.cumsum(np.exp(c[1:]))]
            return alpha, par[k - 1 :]

        def nll(par):
            alpha, beta = unpack(par)
            eta = Z @ beta
            ext = np.r_[-np.inf, alpha, np.inf]
            upper = ext[yy + 1] - eta
            lower = ext[yy] - eta
            Fu, Fl = expit(upper), expit(lower)
            prob = np.maximum(Fu - Fl, 1e-300)
            fu, fl = Fu * (1 - Fu), Fl * (1 - Fl)
            val = -np.sum(np.log(prob)) + 0.5 * RIDGE * beta @ beta
            # d log p / d alpha_j
            g_alpha = np.zeros(k - 1)
            np.add.at(g_alpha, yy[yy < k - 1], (fu / prob)[yy < k - 1])
            np.add.at(g_alpha, yy[yy > 0] - 1, -(fl / prob)[yy > 0])
            g_beta = -Z.T @ ((fu - fl) / prob)
            # chain rule: alpha_i = c0 + sum_{j<=i, j>=1} exp(c_j)
            g_c = np.empty(k - 1)
            g_c[0] = g_alpha.sum()
            for j in range(1, k - 1):
                g_c[j] = g_alpha[j:].sum() * np.exp(par[j])
            grad = -np.r_[g_c, g_beta] + np.r_[np.zeros(k - 1), RIDGE * beta]
            return val, grad

        res = minimize(nll, np.r_[c0, np.zeros(p)], jac=True, method="L-BFGS-B")
        self.alpha, self.beta = unpack(res.x)

    def probs(self, X):
        m = X.shape[0]
        out = np.zeros((m, self.n_levels))
        if len(self.observed) == 1:
            out[:, self.observed[0]] = 1.0
            return out
        eta = X[:, 1:] @ self.beta
        cum = expit(self.alpha[None, :] - eta[:, None])
        p = np.diff(cum, axis=1, prepend=0.0, append=1.0)
        out[:, self.observed] = np.clip(p, 0.0, None)
        return out


class _Categorical(_Discrete):
    """Multinomial logit over observed levels, first observed level as reference."""

    def __init__(self, X, y, n_levels):
        self.n_levels = n_levels
        self.observed = np.flatnonzero(np.bincount(y, minlength=n_levels))
        k = len(self.observed)
        p = X.shape[1]
        if k == 1:
            self.W = np.zeros((p, 0))
            return
        yy = np.searchsorted(self.observed, y)
        onehot = np.eye(k)[yy]
        pen = np.full((p, k - 1), RIDGE)
        pen[0] = 0.0

        def nll(par):
            W = par.reshape(p, k - 1)
            logits = np.column_stack([np.zeros(len(yy)), X @ W])
            logits -= logits.max(axis=1, keepdims=True)
            logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
            val = -np.sum(logp[np.arange(len(yy)), yy]) + 0.5 * np.sum(pen * W**2)
            resid = np.exp(logp) - onehot
            grad = X.T @ resid[:, 1:] + pen * W
            return val, grad.ravel()

        res = minimize(nll, np.zeros(p * (k - 1)), jac=True, method="L-BFGS-B")
        self.W = res.x.reshape(p, k - 1)

    def probs(self, X):
        out = np.zeros((X.shape[0], self.n_levels))
        logits = np.column_stack([np.zeros(X.shape[0]), X @ self.W])
        out[:, self.observed] = softmax(logits, axis=1)
        return out


class ParametricGenerator(FittedGenerator):
    """Sequential GLM generator with direct conditional sampling."""

    supports_conditional = True

    def __init__(self, train, rng=None):
        if train.n_rows == 0:
            raise ValueError("cannot fit a generator on an empty table")
        super().__init__(train.schema, train.n_rows)
        self._steps = []
        names = self.schema.names
        for j, (name, kind) in enumerate(self.schema.columns):
            enc = _Encoder(train, names[:j])
            X = enc(train.to_dict(), train.n_rows)
            y = train.column(name)
            if kind.kind is Kind.CONTINUOUS:
                model = _Continuous(X, y)
            elif kind.kind is Kind.BINARY:
                model = _Binary(X, y)
            elif kind.kind is Kind.ORDINAL:
                model = _Ordinal(X, y, kind.n_levels)
            else:
                model = _Categorical(X, y, kind.n_levels)
            self._steps.append((name, enc, model))

    def model(self, name):
        for n, _, model in self._steps:
            if n == name:
                return model
        raise KeyError(name)

    def _draw(self, m, rng, fixed=None):
        """Sequential draw; ``fixed`` columns are set and their probabilities returned."""
        cols = {}
        weight = np.ones(m)
        for name, enc, model in self._steps:
            X = enc(cols, m)
            if fixed and name in fixed:
                code = fixed[name]
                weight *= model.probs(X)[:, code]
                cols[name] = np.full(m, code, dtype=np.int64)
            else:
                cols[name] = model.sample(X, rng)
        return cols, weight

    def sample(self, m, rng):
        m = self._check_m(m)
        cols, _ = self._draw(m, rng)
        return Table(self.schema, cols)

    def conditional_sample(self, assignment, m, rng, batch=None, max_draws=None):
        """Exact conditional draw.

        Conditioned columns are fixed while their downstream columns are drawn
        from the fitted conditionals; upstream columns are accepted with
        probability equal to the model likelihood of the fixed levels.
        """
        m = int(m)
        if m < 1:
            raise ValueError("conditional sampling needs m >= 1")
        fixed = resolve_assignment(self.schema, assignment)
        batch = int(batch or 10 * m)
        max_draws = int(max_draws or 1000 * m)
        # fixed columns forming a prefix of the column order have constant weight
        prefix = set(self.schema.names[: len(fixed)]) == set(fixed)
        parts, found, drawn = [], 0, 0
        while found < m:
            size = min(batch, max_draws - drawn)
            if size <= 0:
                raise ConditionTooRare(assignment, found, m, drawn)
            cols, weight = self._draw(size, rng, fixed)
            drawn += size
            accept = weight > 0 if prefix else streams.uniform(rng, size) < weight
            idx = np.flatnonzero(accept)[: m - found]
            if idx.size:
                parts.append({k: v[idx] for k, v in cols.items()})
                found += idx.size
        data = {k: np.concatenate([p[k] for p in parts]) for k in self.schema.names}
        return Table(self.schema, data)
