"""Marginal similarity score and memorisation count for synthetic data.

The score is a marginal-only construction: per column, the Kullback-Leibler
divergence KL(original || synthetic) between add-one smoothed histograms
(equal-width bins over the pooled range for continuous columns, native
levels for discrete ones), averaged over columns and mapped to
``1 / (1 + mean KL)``. Two tables with identical marginals but different
joint structure therefore score 1. KL is directional and the direction is
fixed as original relative to synthetic.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from synthdebias.errors import SchemaError


@dataclass
class QualityReport:
    ikld: float
    exact_copies: int
    per_column_kl: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _check_pair(original, synthetic, allow_relaxed=True):
    if original.schema.names != synthetic.schema.names:
        raise SchemaError(f"column mismatch: {original.schema.names} vs {synthetic.schema.names}")
    for name in original.schema.names:
        ko, ks = original.schema.kind(name), synthetic.schema.kind(name)
        if ko == ks:
            continue
        # a shifted binary column is relaxed to continuous by debiasing
        relaxed = ko.kind.value == "binary" and ks.kind.value == "continuous"
        if not (allow_relaxed and relaxed):
            raise SchemaError(f"column {name!r} is {ko.kind.value} vs {ks.kind.value}")


def _counts(original, synthetic, name, bins):
    ko, ks = original.schema.kind(name), synthetic.schema.kind(name)
    x = original.column(name).astype(np.float64)
    y = synthetic.column(name).astype(np.float64)
    if ko.is_discrete and ks.is_discrete:
        k = ko.n_levels
        return np.bincount(x.astype(np.int64), minlength=k), np.bincount(y.astype(np.int64), minlength=k)
    lo = min(x.min(), y.min())
    hi = max(x.max(), y.max())
    if hi == lo:
        return np.array([x.size]), np.array([y.size])
    edges = np.linspace(lo, hi, bins + 1)
    return np.histogram(x, edges)[0], np.histogram(y, edges)[0]


def column_kl(original, synthetic, name, bins=10):
    """Smoothed histogram KL(original || synthetic) for one column."""
    co, cs = _counts(original, synthetic, name, bins)
    p = (co + 1.0) / (co.sum() + co.size)
    q = (cs + 1.0) / (cs.sum() + cs.size)
    return float(np.sum(p * np.log(p / q)))


def ikld(original, synthetic, bins=10):
    """Inverse mean KL score in [0, 1]; higher means more similar marginals."""
    return ikld_columns(original, synthetic, bins)[0]


def ikld_columns(original, synthetic, bins=10):
    _check_pair(original, synthetic)
    if original.n_rows == 0 or synthetic.n_rows == 0:
        raise ValueError("both tables must be non-empty")
    if bins < 1:
        raise ValueError("bins must be positive")
    per = {name: column_kl(original, synthetic, name, bins) for name in original.schema.names}
    return 1.0 / (1.0 + float(np.mean(list(per.values())))), per


def count_exact_copies(original, synthetic):
    """Synthetic rows bit-identical (all fields) to some original row."""
    _check_pair(original, synthetic)
    names = original.schema.names

    def rows(t):
        cols = [np.ascontiguousarray(t.column(c), dtype=np.float64).view(np.int64) for c in names]
        return np.column_stack(cols) if cols else np.empty((t.n_rows, 0), dtype=np.int64)

    seen = {r.tobytes() for r in rows(original)}
    return int(sum(r.tobytes() in seen for r in rows(synthetic)))


def quality_report(original, synthetic, bins=10):
    score, per = ikld_columns(original, synthetic, bins)
    return QualityReport(score, count_exact_copies(original, synthetic), per)
