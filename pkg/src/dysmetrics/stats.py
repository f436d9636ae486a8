"""Severity-level group statistics: group means, Kruskal-Wallis, KS normality."""

from dataclasses import dataclass

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import chi2, norm, rankdata

from .corpus import SEVERITIES
from .errors import EmptyGroup, ZeroVariance

ALPHA = 0.05
DYSARTHRIC = ("mild", "moderate", "severe")


@dataclass(frozen=True)
class KWResult:
    measurement: str
    h: float
    df: int
    p: float

    @property
    def significant(self):
        return self.p < ALPHA


def group_means(rows, feature_names):
    """Mean of each measurement per severity group, plus a pooled dysarthric column.

    rows are (speaker_id, severity, values dict). Cells with no finite
    entries are None, never zero.
    """
    columns = ("healthy", "dys") + DYSARTHRIC
    table = {}
    for name in feature_names:
        table[name] = {}
        for col in columns:
            if col == "dys":
                sample = [
                    rows_values[name]
                    for _, sev, rows_values in rows
                    if sev in DYSARTHRIC and np.isfinite(rows_values.get(name, np.nan))
                ]
            else:
                sample = [
                    rows_values[name]
                    for _, sev, rows_values in rows
                    if sev == col and np.isfinite(rows_values.get(name, np.nan))
                ]
            table[name][col] = float(np.mean(sample)) if sample else None
    return table


def kruskal_wallis(groups, measurement=""):
    """Kruskal-Wallis H test over >= 2 non-empty samples.

    Mid-ranks with tie correction; p from the chi-square approximation with
    df = k - 1. All-identical pooled data gives H = 0, p = 1 by convention.
    """
    groups = [np.asarray(g, dtype=float) for g in groups]
    if len(groups) < 2 or any(len(g) == 0 for g in groups):
        raise EmptyGroup("need >= 2 non-empty groups")
    pooled = np.concatenate(groups)
    n_total = len(pooled)
    df = len(groups) - 1
    if np.all(pooled == pooled[0]):
        return KWResult(measurement=measurement, h=0.0, df=df, p=1.0)
    ranks = rankdata(pooled)
    h = 12.0 / (n_total * (n_total + 1))
    pos = 0
    acc = 0.0
    for g in groups:
        r = ranks[pos:pos + len(g)]
        acc += r.sum() ** 2 / len(g)
        pos += len(g)
    h = h * acc - 3.0 * (n_total + 1)
    _, counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - np.sum(counts ** 3 - counts) / (n_total ** 3 - n_total)
    h /= correction
    p = float(chi2.sf(h, df))
    return KWResult(measurement=measurement, h=float(h), df=df, p=p)


def ks_normality(sample):
    """One-sample KS test of the standardized sample against the normal CDF.

    Mean and std are estimated from the sample itself, so the asymptotic
    p-value is approximate (Lilliefors-style usage).
    """
    x = np.asarray(sample, dtype=float)
    if len(x) < 3:
        raise ValueError(f"need >= 3 observations, got {len(x)}")
    std = np.std(x)
    if std == 0:
        raise ZeroVariance("constant sample")
    z = np.sort((x - np.mean(x)) / std)
    n = len(z)
    cdf = norm.cdf(z)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    d = float(max(upper.max(), lower.max()))
    p = float(kolmogorov(np.sqrt(n) * d))
    return d, p, p >= ALPHA


def feature_significance(rows, feature_names, severities=SEVERITIES):
    """KWResult per measurement, grouping utterance values by severity.

    Groups with no finite values are dropped; measurements with fewer than
    two usable groups are skipped (returned as None).
    """
    results = {}
    for name in feature_names:
        groups = []
        for sev in severities:
            sample = [
                values[name]
                for _, s, values in rows
                if s == sev and np.isfinite(values.get(name, np.nan))
            ]
            if sample:
                groups.append(sample)
        if len(groups) < 2:
            results[name] = None
            continue
        results[name] = kruskal_wallis(groups, measurement=name)
    return results
