"""Distribution helpers shared by the association and GC services."""

import numpy as np
from scipy import special, stats


def chi2_sf(statistic, df: int = 1):
    """Upper tail of chi-square via the regularized upper incomplete gamma.

    NaN statistics map to NaN p-values.
    """
    statistic = np.asarray(statistic, dtype=float)
    with np.errstate(invalid="ignore"):
        p = special.gammaincc(df / 2.0, np.maximum(statistic, 0.0) / 2.0)
    p = np.where(np.isnan(statistic), np.nan, p)
    return float(p) if p.ndim == 0 else p


def chi2_cdf(x, df: int):
    return stats.chi2.cdf(x, df)


def chi2_quantile(q, df: int = 1):
    return stats.chi2.ppf(q, df)


def chi2_median(df: int = 1) -> float:
    """Exact chi-square median (0.45494... for one degree of freedom)."""
    return float(stats.chi2.ppf(0.5, df))


def f_sf(statistic, dfn: int, dfd: int):
    statistic = np.asarray(statistic, dtype=float)
    p = stats.f.sf(np.maximum(statistic, 0.0), dfn, dfd)
    p = np.where(np.isnan(statistic), np.nan, p)
    return float(p) if p.ndim == 0 else p


def binomial_two_sided(k: int, n: int) -> float:
    """Exact two-sided Binomial(n, 1/2) p-value."""
    return float(stats.binomtest(int(k), int(n), 0.5).pvalue)
