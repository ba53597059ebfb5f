"""Choice of the subspace dimension d and the moving-average order q.

* ``select_d``: sequential portmanteau test for independence of the
  principal scores just beyond the current dimension.
* ``select_q_lb``: multivariate Ljung-Box on the d-dimensional scores.
* ``aicc`` / ``select_q_aicc``: corrected AIC using the Gaussian likelihood
  in innovations form.
* ``ffpe`` / ``select_dq_ffpe``: joint (d, q) choice by a functional final
  prediction error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import FunctionalSample, center, fpca, lag_cov, lagged_cov, tve
from .errors import (
    FmaError,
    LagTooLarge,
    PenaltyUndefined,
    RankExhausted,
    SingularC0,
    SingularTailCovariance,
    ValidationError,
)
from .innovations import (
    COND_LIMIT,
    default_lags,
    fit_fma,
    innovations_algorithm,
    ma_filter,
)

DEFAULTS = dict(P=0.8, p=3, hbar=5, alpha=0.05, q_max=5, d_max=10)

_EPS = 1e-15
_TINY = 1e-300


# ---------------------------------------------------------------------------
# chi-square distribution

def _gamma_series(a, x):
    # lower regularized P(a, x), series; good for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a, x):
    # upper regularized Q(a, x), modified Lentz; good for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gammainc_pq(a: float, x: float):
    """Regularized incomplete gamma functions ``(P(a, x), Q(a, x))``."""
    if a <= 0:
        raise ValidationError("shape must be positive")
    if x <= 0:
        return 0.0, 1.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return p, 1.0 - p
    q = _gamma_cfrac(a, x)
    return 1.0 - q, q


def chi_sq_cdf(x: float, df: float) -> float:
    return gammainc_pq(0.5 * df, 0.5 * x)[0]


def chi_sq_sf(x: float, df: float) -> float:
    """Upper tail probability; accurate far into the tail."""
    return gammainc_pq(0.5 * df, 0.5 * x)[1]


def chi_sq_quantile(df: int, alpha: float) -> float:
    """Upper-``alpha`` quantile of the chi-square distribution with ``df`` degrees of freedom.

    Bisection on the survival function, to an absolute tolerance well below
    ``1e-6``.
    """
    if df < 1:
        raise ValidationError("degrees of freedom must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    lo, hi = 0.0, max(1.0, float(df))
    while chi_sq_sf(hi, df) > alpha:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi_sq_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# portmanteau statistics

@dataclass(frozen=True)
class TestRecord:
    """One line of a selection trail."""

    name: str
    statistic: float
    df: int | None
    value: float
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "df": self.df,
            "value": self.value,
            **self.params,
        }


def _inv_c0(C0, exc, what):
    d = C0.shape[0]
    if np.linalg.cond(C0) >= COND_LIMIT:
        eps = 1e-10 * np.trace(C0) / d
        C0 = C0 + eps * np.eye(d)
        if not np.isfinite(eps) or eps <= 0 or np.linalg.cond(C0) >= COND_LIMIT:
            raise exc(f"{what} covariance is singular")
    return np.linalg.inv(C0)


def _portmanteau_terms(x, hmax, exc, what):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if hmax > n - 2:
        raise LagTooLarge(f"lag {hmax} needs more than {n} observations")
    C0 = lagged_cov(x, 0, divisor="n")
    Ci = _inv_c0(0.5 * (C0 + C0.T), exc, what)
    terms = []
    for h in range(1, hmax + 1):
        Ch = lagged_cov(x, h, divisor="n")
        terms.append(float(np.trace(Ch.T @ Ci @ Ch @ Ci)))
    return n, x.shape[1], terms


def independence_test(tail_scores, hbar: int = 5):
    """Portmanteau test that the ``p`` tail score series are white noise.

    ``Q = n sum_{h=1}^{hbar} tr(C_h^T C_0^{-1} C_h C_0^{-1})`` with lag tables
    of divisor ``n``; asymptotically chi-square with ``p^2 hbar`` degrees of
    freedom under independence.

    Returns
    -------
    (Q, df, p_value)
    """
    if hbar < 1:
        raise ValidationError("hbar must be at least 1")
    n, p, terms = _portmanteau_terms(tail_scores, hbar, SingularTailCovariance, "tail")
    if n <= p * hbar + 1:
        raise ValidationError(f"need n > p*hbar + 1 = {p * hbar + 1}, got n = {n}")
    Q = n * sum(terms)
    df = p * p * hbar
    return Q, df, chi_sq_sf(Q, df)


def ljung_box_stat(scores, hlow: int, hbar: int):
    """Multivariate Ljung-Box statistic over lags ``hlow..hbar``.

    ``Q = n^2 sum_h tr(C_h^T C_0^{-1} C_h C_0^{-1}) / (n - h)``, chi-square with
    ``d^2 (hbar - hlow + 1)`` degrees of freedom when the scores follow a
    moving average of order below ``hlow``.

    Returns
    -------
    (Q, df, p_value)
    """
    if not 1 <= hlow <= hbar:
        raise ValidationError("need 1 <= hlow <= hbar")
    n, d, terms = _portmanteau_terms(scores, hbar, SingularC0, "lag-0 score")
    if n <= hbar + 1:
        raise ValidationError(f"need n > hbar + 1, got n = {n}")
    Q = n * n * sum(terms[h - 1] / (n - h) for h in range(hlow, hbar + 1))
    df = d * d * (hbar - hlow + 1)
    return Q, df, chi_sq_sf(Q, df)


def _eig_of(sample):
    if not sample.centered:
        sample = center(sample)
    return sample, fpca(lag_cov(sample, 0))


def _available_rank(eig, n):
    return min(n - 1, eig.all_values.size)


def select_d(sample: FunctionalSample, P: float = 0.8, p: int = 3, hbar: int = 5,
             alpha: float = 0.05, d_max: int = 10, eig=None):
    """Sequential choice of the subspace dimension.

    Starts from the smallest d explaining a fraction ``P`` of the variance and
    raises it while the next ``p`` score series fail the independence test at
    level ``alpha``. The level is not adjusted for the repeated tests.

    Returns
    -------
    (d, d_tve, trail)
    """
    if p < 1:
        raise ValidationError("p must be at least 1")
    if eig is None:
        sample, eig = _eig_of(sample)
    elif not sample.centered:
        sample = center(sample)
    rank = _available_rank(eig, sample.n)
    d_tve = tve(eig, P)
    d = d_tve
    trail = []
    while True:
        if d + p > rank:
            raise RankExhausted(
                f"testing directions {d + 1}..{d + p} needs more than the {rank} available"
            )
        tail = sample.coeffs @ eig.vectors[:, d:d + p]
        Q, df, pval = independence_test(tail, hbar)
        trail.append(TestRecord("independence", Q, df, pval, {"d": d, "p": p, "hbar": hbar}))
        if pval >= alpha or d >= d_max:
            return d, d_tve, trail
        d += 1


def select_q_lb(scores, hbar: int = 5, alpha: float = 0.05, q_max: int = 5):
    """Largest starting lag whose Ljung-Box statistic is significant (0 if none).

    Returns
    -------
    (q, trail)
    """
    q = 0
    trail = []
    for hlow in range(1, min(q_max, hbar) + 1):
        Q, df, pval = ljung_box_stat(scores, hlow, hbar)
        trail.append(TestRecord("ljung_box", Q, df, pval, {"hlow": hlow, "hbar": hbar}))
        if pval < alpha:
            q = hlow
    return q, trail


# ---------------------------------------------------------------------------
# information criteria

def aicc(scores, q: int, k: int | None = None) -> float:
    """Corrected AIC of a VMA(q) fitted to ``scores`` by the innovations recursion.

    The coefficients are the first ``q`` blocks of row ``k`` and ``V_k``; the
    likelihood is the exact Gaussian likelihood of that VMA(q), evaluated
    through its own innovations filter. Penalty ``2nd(qd^2+1)/(nd-qd^2-2)``.
    """
    x = np.asarray(getattr(scores, "scores", scores), dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    denom = n * d - q * d * d - 2
    if denom <= 0:
        raise PenaltyUndefined(f"nd - qd^2 - 2 = {denom} is not positive")
    if k is None:
        k = default_lags(n, q)
    x = x - x.mean(axis=0)
    fit = innovations_algorithm(x, k)
    theta = fit.theta[k][:q] if q else np.zeros((0, d, d))
    res = ma_filter(theta, fit.V[k], x)
    return -2.0 * res.loglik + 2.0 * n * d * (q * d * d + 1) / denom


def select_q_aicc(scores, q_max: int = 5, k: int | None = None):
    """Order minimizing :func:`aicc` over ``0..q_max``; returns ``(q, trail)``."""
    trail = []
    best, best_q = np.inf, 0
    for q in range(q_max + 1):
        try:
            val = aicc(scores, q, k)
        except (PenaltyUndefined, LagTooLarge):
            break
        trail.append(TestRecord("aicc", val, None, val, {"q": q}))
        if val < best:
            best, best_q = val, q
    return best_q, trail


def ffpe(sample: FunctionalSample, d: int, q: int, k: int | None = None, eig=None) -> float:
    """Functional final prediction error ``(n+qd)/n tr(V) + sum_{i>d} lambda_i``.

    ``V`` is the covariance of the one-step residuals of the fitted FMA(q) on
    the d-dimensional scores, with divisor ``n - qd`` to undo the in-sample
    fit. The tail sum runs over the estimable eigenvalues, up to rank
    ``min(n - 1, D)``.
    """
    if eig is None:
        sample, eig = _eig_of(sample)
    elif not sample.centered:
        sample = center(sample)
    model = fit_fma(sample, d, q, k=k, eig=eig)
    x = sample.coeffs @ model.eigvecs
    res = ma_filter(model.theta, model.V, x)
    n = sample.n
    if n - q * d <= 0:
        raise PenaltyUndefined(f"n - qd = {n - q * d} is not positive")
    V = res.resid.T @ res.resid / (n - q * d)
    rank = _available_rank(eig, n)
    tail = float(np.sum(eig.all_values[d:rank]))
    return (n + q * d) / n * float(np.trace(V)) + tail


def select_dq_ffpe(sample: FunctionalSample, d_max: int = 10, q_max: int = 5,
                   k: int | None = None, eig=None):
    """Joint grid search of :func:`ffpe` over ``1..d_max`` x ``0..q_max``.

    Ties go to the smaller (d, q) in lexicographic order. Cells whose fit
    fails are skipped and appear in the trail with a NaN value and the error.

    Returns
    -------
    (d, q, trail)
    """
    if eig is None:
        sample, eig = _eig_of(sample)
    elif not sample.centered:
        sample = center(sample)
    d_max = min(d_max, _available_rank(eig, sample.n))
    trail = []
    best = (np.inf, None, None)
    for d in range(1, d_max + 1):
        for q in range(q_max + 1):
            try:
                val = ffpe(sample, d, q, k=k, eig=eig)
            except FmaError as exc:
                trail.append(TestRecord("ffpe", math.nan, None, math.nan,
                                        {"d": d, "q": q, "error": type(exc).__name__}))
                continue
            trail.append(TestRecord("ffpe", val, None, val, {"d": d, "q": q}))
            if val < best[0]:
                best = (val, d, q)
    if best[1] is None:
        raise RankExhausted("no (d, q) cell could be fitted")
    return best[1], best[2], trail


# ---------------------------------------------------------------------------

@dataclass
class SelectionReport:
    d_tve: int
    d_ind: int
    q_lb: int
    q_aicc: int
    d_ffpe: int
    q_ffpe: int
    trail: list
    params: dict

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("d_tve", "d_ind", "q_lb", "q_aicc", "d_ffpe", "q_ffpe")}
        out["params"] = dict(self.params)
        out["trail"] = [r.as_dict() for r in self.trail]
        return out


def select_all(sample: FunctionalSample, P: float = 0.8, p: int = 3, hbar: int = 5,
               alpha: float = 0.05, q_max: int = 5, d_max: int = 10,
               k: int | None = None) -> SelectionReport:
    """Run every selector: d by the independence test, then q by Ljung-Box and
    AICC on that d, and (d, q) jointly by fFPE."""
    sample, eig = _eig_of(sample)
    d, d_tve, trail = select_d(sample, P, p, hbar, alpha, d_max, eig=eig)
    x = sample.coeffs @ eig.vectors[:, :d]
    q_lb, t_lb = select_q_lb(x, hbar, alpha, q_max)
    q_aicc, t_aicc = select_q_aicc(x, q_max, k)
    d_f, q_f, t_f = select_dq_ffpe(sample, d_max, q_max, k, eig=eig)
    return SelectionReport(
        d_tve=d_tve, d_ind=d, q_lb=q_lb, q_aicc=q_aicc, d_ffpe=d_f, q_ffpe=q_f,
        trail=trail + t_lb + t_aicc + t_f,
        params=dict(P=P, p=p, hbar=hbar, alpha=alpha, q_max=q_max, d_max=d_max),
    )
