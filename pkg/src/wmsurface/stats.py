"""Analysis toolbox: absolute-agreement ICC, Pearson correlation with a
JZS Bayes factor, paired/one-sample t summaries, and IQR outlier fencing.

Distribution tails come from scipy (incomplete-beta based); the Bayes
factors are evaluated here by adaptive quadrature over the JZS effect-size
prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats as sps

from .domain import DomainError

# Cauchy prior scales for the JZS Bayes factors; the prior family is fixed
# but the scale is configuration.
DEFAULT_CORRELATION_SCALE = 1.0 / math.sqrt(2.0)
DEFAULT_TTEST_SCALE = math.sqrt(2.0) / 2.0
_QUAD_TOL = 1e-8


@dataclass(frozen=True)
class AgreementResult:
    icc: float
    f_stat: float
    p_value: float
    ci_lo: float
    ci_hi: float
    n: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "icc": self.icc,
            "f_stat": self.f_stat,
            "p_value": self.p_value,
            "ci": [self.ci_lo, self.ci_hi],
            "n": self.n,
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    r_squared: float
    p_value: float
    ci_lo: float
    ci_hi: float
    bf10: float
    n: int

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "r_squared": self.r_squared,
            "p_value": self.p_value,
            "ci": [self.ci_lo, self.ci_hi],
            "bf10": self.bf10,
            "n": self.n,
        }


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    ci_lo: float
    ci_hi: float
    bf10: float
    cohens_dz: float
    n: int
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "p": self.p,
            "ci": [self.ci_lo, self.ci_hi],
            "bf10": self.bf10,
            "cohens_dz": self.cohens_dz,
            "n": self.n,
            "degenerate": self.degenerate,
        }


def icc_2_1(pairs, confidence: float = 0.95) -> AgreementResult:
    """Two-way random-effects, absolute-agreement, single-measure ICC.

    ANOVA decomposition over an n x 2 table (subjects x measurement
    systems); the F test is MS_rows / MS_error and the CI follows the
    McGraw & Wong construction from F-distribution bounds.
    """
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError("icc_2_1 expects a list of (rater1, rater2) pairs")
    n, k = data.shape
    if n < 3:
        raise DomainError("icc_2_1 requires at least 3 pairs")
    if not np.all(np.isfinite(data)):
        raise DomainError("non-finite values in ICC input")

    grand = data.mean()
    row_means = data.mean(axis=1)
    col_means = data.mean(axis=0)
    ss_rows = k * np.sum((row_means - grand) ** 2)
    ss_cols = n * np.sum((col_means - grand) ** 2)
    ss_total = np.sum((data - grand) ** 2)
    ss_err = ss_total - ss_rows - ss_cols

    if ss_total < 1e-300:
        return AgreementResult(1.0, math.inf, 0.0, 1.0, 1.0, n, degenerate=True)

    msr = ss_rows / (n - 1)
    msc = ss_cols / (k - 1)
    mse = max(ss_err / ((n - 1) * (k - 1)), 0.0)

    icc = (msr - mse) / (msr + (k - 1) * mse + (k / n) * (msc - mse))

    if mse == 0.0:
        return AgreementResult(float(icc), math.inf, 0.0, float(icc), 1.0, n, degenerate=True)

    f_stat = msr / mse
    df1, df2 = n - 1, (n - 1) * (k - 1)
    p_value = float(sps.f.sf(f_stat, df1, df2))

    alpha = 1.0 - confidence
    # Satterthwaite df for the CI bound involving MSC and MSE
    a = (k * icc) / (n * (1.0 - icc)) if icc < 1.0 else math.inf
    b = 1.0 + (k * icc * (n - 1)) / (n * (1.0 - icc)) if icc < 1.0 else math.inf
    if math.isfinite(a) and math.isfinite(b):
        num = (a * msc + b * mse) ** 2
        den = (a * msc) ** 2 / (k - 1) + (b * mse) ** 2 / ((n - 1) * (k - 1))
        v = num / den if den > 0 else df2
    else:
        v = df2
    f_l = sps.f.ppf(1.0 - alpha / 2.0, df1, v)
    f_u = sps.f.ppf(1.0 - alpha / 2.0, v, df1)
    denom_lo = f_l * (k * msc + (k * n - k - n) * mse) + n * msr
    ci_lo = n * (msr - f_l * mse) / denom_lo if denom_lo != 0 else -1.0
    denom_hi = k * msc + (k * n - k - n) * mse + n * f_u * msr
    ci_hi = n * (f_u * msr - mse) / denom_hi if denom_hi != 0 else 1.0
    return AgreementResult(
        icc=float(icc),
        f_stat=float(f_stat),
        p_value=p_value,
        ci_lo=float(min(ci_lo, icc)),
        ci_hi=float(max(ci_hi, icc)),
        n=n,
    )


def _jzs_correlation_bf10(r: float, n: int, scale: float) -> float:
    """BF10 for a Pearson correlation under a JZS (Cauchy on effect via
    g ~ InverseGamma(1/2, scale^2 n / 2)) prior, by adaptive quadrature."""
    r2 = r * r
    if r2 >= 1.0 - 1e-12:
        return math.inf  # marginal likelihood ratio diverges at |r| = 1
    half_b = 0.5 * scale * scale * n

    def log_integrand(g: float) -> float:
        return (
            0.5 * (n - 2) * math.log1p(g)
            - 0.5 * (n - 1) * math.log1p((1.0 - r2) * g)
            - 1.5 * math.log(g)
            - half_b / g
        )

    # peak-normalize for numerical range
    gs = np.geomspace(1e-4, 1e6, 200)
    log_peak = max(log_integrand(g) for g in gs)

    def integrand(g: float) -> float:
        return math.exp(log_integrand(g) - log_peak)

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    log_const = 0.5 * math.log(half_b) - math.lgamma(0.5)
    return float(math.exp(log_const + log_peak + math.log(val)))


def pearson_with_bf(
    x, y, scale: float = DEFAULT_CORRELATION_SCALE, confidence: float = 0.95
) -> CorrelationResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be equal-length 1-D vectors")
    n = len(x)
    if n < 4:
        raise DomainError("pearson_with_bf requires n >= 4")
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        raise DomainError("correlation undefined: zero variance input")

    r = float(np.corrcoef(x, y)[0, 1])
    r = max(-1.0, min(1.0, r))
    if abs(r) < 1.0:
        t = r * math.sqrt((n - 2) / (1.0 - r * r))
        p = float(2.0 * sps.t.sf(abs(t), n - 2))
    else:
        p = 0.0
    z = math.atanh(min(max(r, -1 + 1e-15), 1 - 1e-15))
    zc = sps.norm.ppf(0.5 + confidence / 2.0)
    half = zc / math.sqrt(n - 3)
    return CorrelationResult(
        r=r,
        r_squared=r * r,
        p_value=p,
        ci_lo=float(math.tanh(z - half)),
        ci_hi=float(math.tanh(z + half)),
        bf10=_jzs_correlation_bf10(r, n, scale),
        n=n,
    )


def _jzs_ttest_bf10(t: float, n: int, scale: float) -> float:
    """One-sample JZS BF10 (Rouder et al. construction) via quadrature."""
    nu = n - 1
    log_h0 = -0.5 * (nu + 1) * math.log1p(t * t / nu)
    half_b = 0.5 * scale * scale

    def log_num(g: float) -> float:
        ng1 = 1.0 + n * g
        return (
            -0.5 * math.log(ng1)
            - 0.5 * (nu + 1) * math.log1p(t * t / (ng1 * nu))
            + 0.5 * math.log(half_b)
            - math.lgamma(0.5)
            - 1.5 * math.log(g)
            - half_b / g
        )

    gs = np.geomspace(1e-6, 1e6, 240)
    log_peak = max(log_num(g) for g in gs)

    def integrand(g: float) -> float:
        return math.exp(log_num(g) - log_peak)

    val, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    return float(math.exp(log_peak + math.log(val) - log_h0))


def paired_t(
    diffs, scale: float = DEFAULT_TTEST_SCALE, confidence: float = 0.95
) -> TTestResult:
    """One-sample t on a vector of paired differences, with Student-t CI,
    Cohen's d_z, and the JZS BF10."""
    d = np.asarray(diffs, dtype=float)
    if d.ndim != 1 or len(d) < 2:
        raise DomainError("paired_t requires a 1-D vector of length >= 2")
    if not np.all(np.isfinite(d)):
        raise DomainError("non-finite differences")
    n = len(d)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, 0.0, 0.0, 0.0, 0.0, n, degenerate=True)
        t = math.copysign(math.inf, mean)
        return TTestResult(t, 0.0, mean, mean, math.inf, math.copysign(math.inf, mean), n, degenerate=True)
    se = sd / math.sqrt(n)
    t = mean / se
    p = float(2.0 * sps.t.sf(abs(t), n - 1))
    tc = float(sps.t.ppf(0.5 + confidence / 2.0, n - 1))
    return TTestResult(
        t=float(t),
        p=p,
        ci_lo=mean - tc * se,
        ci_hi=mean + tc * se,
        bf10=_jzs_ttest_bf10(t, n, scale),
        cohens_dz=mean / sd,
        n=n,
    )


def iqr_fence_outliers(values, k: float = 1.5) -> set:
    """Indices outside [Q1 - k*IQR, Q3 + k*IQR]; type-7 quartiles."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or len(v) < 4:
        raise DomainError("iqr_fence_outliers requires at least 4 values")
    q1, q3 = np.percentile(v, [25.0, 75.0])  # numpy default is type-7
    iqr = q3 - q1
    lo, hi = q1 - k * iqr, q3 + k * iqr
    return {int(i) for i in np.flatnonzero((v < lo) | (v > hi))}


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DomainError("rmse requires equal shapes")
    return float(np.sqrt(np.mean((a - b) ** 2)))
