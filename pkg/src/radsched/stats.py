"""Statistical tests for strategy comparisons.

The F and t tail probabilities are evaluated through an in-repo regularized
incomplete beta function (continued-fraction form), cross-checked against
scipy in the test suite.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["betainc_reg", "one_way_anova", "paired_t_test", "sign_test"]

_MAX_ITER = 300
_CF_EPS = 1e-14


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def _f_sf(f: float, df1: int, df2: int) -> float:
    """P(F > f) for an F(df1, df2) variate."""
    if math.isinf(f):
        return 0.0
    if f <= 0:
        return 1.0
    return betainc_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))


def _t_sf_two_sided(t: float, df: int) -> float:
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def one_way_anova(groups) -> tuple[float, float]:
    """Classic between/within decomposition; returns (F, p)."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(g.shape[0] < 2 for g in groups):
        raise ValueError("need >= 2 groups with >= 2 samples each")
    k = len(groups)
    n_total = sum(g.shape[0] for g in groups)
    grand = sum(g.sum() for g in groups) / n_total
    ss_between = sum(g.shape[0] * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    df1, df2 = k - 1, n_total - k
    if ss_within == 0.0:
        if ss_between == 0.0:
            return 0.0, 1.0
        return math.inf, 0.0
    f = (ss_between / df1) / (ss_within / df2)
    return f, _f_sf(f, df1, df2)


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-sided paired t-test on the differences a - b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape[0] < 2:
        raise ValueError("need equal-length samples with n >= 2")
    d = a - b
    n = d.shape[0]
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    return t, _t_sf_two_sided(t, n - 1)


def sign_test(wins: int, losses: int, alternative: str = "two-sided") -> float:
    """Exact binomial sign test at p=1/2; ties must be excluded beforehand.

    ``alternative='greater'`` tests whether wins dominate.
    """
    n = wins + losses
    if n == 0:
        return 1.0
    pmf = [math.comb(n, k) * 0.5 ** n for k in range(n + 1)]
    tail_ge = sum(pmf[wins:])
    tail_le = sum(pmf[:wins + 1])
    if alternative == "greater":
        return min(1.0, tail_ge)
    if alternative == "less":
        return min(1.0, tail_le)
    return min(1.0, 2.0 * min(tail_ge, tail_le))
