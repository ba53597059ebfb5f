"""Sample functional Innovations Algorithm on an estimated principal subspace.

Everything here works on d-dimensional score vectors. Lag tables follow the
convention of :mod:`fmainnov.core`: ``C[h] = E[x_{j+h} x_j^T]``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec
from .core import (
    EigenSystem,
    FunctionalSample,
    ScoreMatrix,
    center,
    fpca,
    lag_cov,
    lagged_cov,
    scores as project_scores,
)
from .errors import (
    EmptySample,
    LagTooLarge,
    NonPSDInput,
    SingularGamma,
    SingularV,
    ValidationError,
)

COND_LIMIT = 1e12
MAX_DEFAULT_LAGS = 25


@dataclass
class InnovationsFit:
    """Triangular coefficient array and innovation covariances.

    ``theta[m]`` has shape ``(m, d, d)`` and holds ``theta_{m,1}, ..., theta_{m,m}``;
    ``theta[0]`` is empty. ``V[m]`` is the covariance of the m-th innovation.
    """

    k: int
    theta: list
    V: list

    @property
    def d(self) -> int:
        return self.V[0].shape[0]

    def coef(self, m: int, i: int) -> np.ndarray:
        if i == 0:
            return np.eye(self.d)
        return self.theta[m][i - 1]


@dataclass
class InverseFilter:
    """Regression (inverse-filter) blocks ``beta_{k,1}, ..., beta_{k,k}``."""

    beta: np.ndarray

    @property
    def k(self) -> int:
        return self.beta.shape[0]


@dataclass
class FmaModel:
    basis: BasisSpec
    eigvecs: np.ndarray
    eigvals_all: np.ndarray
    d: int
    q: int
    k_used: int
    theta: np.ndarray
    V: np.ndarray
    mean: np.ndarray
    provenance: dict = field(default_factory=dict)

    def embedded_theta(self, i: int = 1) -> np.ndarray:
        """``theta_i`` as a ``D x D`` table in the basis coordinates."""
        return self.eigvecs @ self.theta[i - 1] @ self.eigvecs.T


def default_lags(n: int, q: int = 0) -> int:
    """Number of lags for the innovations recursion: ``max(q+1, ceil(n^(1/3)))``, at most 25."""
    k = max(q + 1, math.ceil(round(n ** (1.0 / 3.0), 10)))
    return max(q, min(k, MAX_DEFAULT_LAGS, n - 2))


def score_lag_covs(x, k: int) -> list:
    """Lag tables ``C_0, ..., C_k`` of a score matrix, divisor ``n - h``."""
    x = np.asarray(x.scores if isinstance(x, ScoreMatrix) else x, dtype=float)
    n = x.shape[0]
    if k > n - 2:
        raise LagTooLarge(f"k = {k} exceeds n - 2 = {n - 2}")
    covs = [lagged_cov(x, h) for h in range(k + 1)]
    covs[0] = 0.5 * (covs[0] + covs[0].T)
    return covs


def _as_covs(source, k):
    if isinstance(source, (ScoreMatrix, np.ndarray)):
        return score_lag_covs(source, k)
    covs = [np.atleast_2d(np.asarray(c, dtype=float)) for c in source]
    if len(covs) < k + 1:
        raise LagTooLarge(f"need lag tables up to {k}, got {len(covs) - 1}")
    return covs


def _cov_at(covs, h):
    return covs[h] if h >= 0 else covs[-h].T


def block_cov(scores, k: int):
    """Block-Toeplitz covariance of stacked lags and its lag-1 cross covariance.

    Returns ``(Gamma_k, Gamma_1k)`` where block ``(a, b)`` of ``Gamma_k`` is
    ``C_{b-a}`` and ``Gamma_1k = [C_1, ..., C_k]``. ``scores`` may also be a
    list of precomputed lag tables.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    covs = _as_covs(scores, k)
    d = covs[0].shape[0]
    G = np.empty((k * d, k * d))
    for a in range(k):
        for b in range(k):
            G[a * d:(a + 1) * d, b * d:(b + 1) * d] = _cov_at(covs, b - a)
    G = 0.5 * (G + G.T)
    G1 = np.hstack([covs[h] for h in range(1, k + 1)])
    return G, G1


def yule_walker(scores, k: int, ridge: float = 0.0) -> InverseFilter:
    """Solve ``B(k) = Gamma_1k (Gamma_k + ridge I)^{-1}`` and split into k blocks."""
    if ridge < 0:
        raise ValidationError("ridge must be non-negative")
    G, G1 = block_cov(scores, k)
    d = G1.shape[0]
    if ridge:
        G = G + ridge * np.eye(G.shape[0])
    if np.linalg.cond(G) >= COND_LIMIT:
        raise SingularGamma(f"block covariance of order {k} is numerically singular")
    B = np.linalg.solve(G, G1.T).T
    return InverseFilter(B.reshape(d, k, d).transpose(1, 0, 2).copy())


def _right_inverse(X, V):
    """``X @ V^{-1}``, with one ridge retry for ill-conditioned ``V``."""
    d = V.shape[0]
    if np.linalg.cond(V) >= COND_LIMIT:
        eps = 1e-10 * np.trace(V) / d
        V = V + eps * np.eye(d)
        if not np.isfinite(eps) or eps <= 0 or np.linalg.cond(V) >= COND_LIMIT:
            raise SingularV("innovation covariance is singular beyond ridge repair")
    return np.linalg.solve(V.T, X.T).T


def innovations_algorithm(lagcovs, k: int) -> InnovationsFit:
    """Run the innovations recursion for ``k`` steps.

    Parameters
    ----------
    lagcovs : sequence of (d, d) arrays, ScoreMatrix or (n, d) array
        Lag tables ``C_0, ..., C_k`` (``C_h = E[x_{j+h} x_j^T]``); a score
        matrix is converted with :func:`score_lag_covs`.
    k : int
        Number of steps.

    Returns
    -------
    InnovationsFit
    """
    covs = _as_covs(lagcovs, k)
    C0 = 0.5 * (covs[0] + covs[0].T)
    d = C0.shape[0]
    tr = np.trace(C0)
    if np.linalg.eigvalsh(C0).min() < -1e-8 * max(abs(tr), 1e-300):
        raise NonPSDInput("lag-0 covariance is not positive semidefinite")

    theta = [np.zeros((0, d, d))]
    V = [C0]
    for m in range(1, k + 1):
        row = np.zeros((m, d, d))
        for i in range(m):
            acc = covs[m - i].copy()
            for j in range(i):
                acc -= row[m - j - 1] @ V[j] @ theta[i][i - j - 1].T
            row[m - i - 1] = _right_inverse(acc, V[i])
        Vm = C0.copy()
        for j in range(m):
            t = row[m - j - 1]
            Vm -= t @ V[j] @ t.T
        theta.append(row)
        V.append(0.5 * (Vm + Vm.T))
    return InnovationsFit(k, theta, V)


def beta_to_theta(scores, k: int, ridge: float = 0.0) -> list:
    """Innovations coefficients from regression coefficients.

    Solves the Yule-Walker system at every order ``m <= k`` and applies
    ``theta_{m,i} = sum_{j=1}^{i} beta_{m,j} theta_{m-j,i-j}`` with
    ``theta_{., 0} = I``. Returns the triangular array in the layout of
    :attr:`InnovationsFit.theta`.
    """
    covs = _as_covs(scores, k)
    d = covs[0].shape[0]
    eye = np.eye(d)
    theta = [np.zeros((0, d, d))]
    for m in range(1, k + 1):
        beta = yule_walker(covs, m, ridge).beta
        row = np.zeros((m, d, d))
        for i in range(1, m + 1):
            acc = np.zeros((d, d))
            for j in range(1, i + 1):
                prev = eye if i == j else theta[m - j][i - j - 1]
                acc += beta[j - 1] @ prev
            row[i - 1] = acc
        theta.append(row)
    return theta


def fit_fma(sample: FunctionalSample, d: int, q: int, k: int | None = None,
            eig: EigenSystem | None = None) -> FmaModel:
    """Fit an FMA(q) on the d-dimensional leading principal subspace.

    ``eig`` may be passed to reuse an eigendecomposition of the centered
    sample's lag-0 covariance.
    """
    if q < 0:
        raise ValidationError("q must be non-negative")
    if d < 1 or d > sample.dim:
        raise ValidationError(f"d = {d} outside 1..{sample.dim}")
    if not sample.centered:
        sample = center(sample)
    if k is None:
        k = default_lags(sample.n, q)
    if q > k or k > sample.n - 2:
        raise LagTooLarge(f"need q <= k <= n - 2, got q={q}, k={k}, n={sample.n}")
    if eig is None:
        eig = fpca(lag_cov(sample, 0))
    x = project_scores(sample, eig, d)
    fit = innovations_algorithm(x, k)
    theta = fit.theta[k][:q].copy() if q else np.zeros((0, d, d))
    return FmaModel(
        basis=sample.basis,
        eigvecs=eig.vectors[:, :d].copy(),
        eigvals_all=np.asarray(eig.all_values if eig.all_values is not None else eig.values),
        d=d,
        q=q,
        k_used=k,
        theta=theta,
        V=fit.V[k].copy(),
        mean=sample.mean.copy(),
    )


def predict_from_fit(fit: InnovationsFit, scores) -> np.ndarray:
    """One-step predictions ``xhat_1, ..., xhat_{n+1}`` from a triangular fit.

    Uses the growing-history rows ``theta_{m,.}`` with ``m = min(j, k)``.
    Returns an ``(n + 1, d)`` array; the last row predicts the next curve.
    """
    x = np.asarray(scores.scores if isinstance(scores, ScoreMatrix) else scores, float)
    n = x.shape[0]
    if n < 1:
        raise EmptySample("prediction needs at least one observation")
    d = x.shape[1]
    xhat = np.zeros((n + 1, d))
    resid = np.zeros((n, d))
    for j in range(n):
        resid[j] = x[j] - xhat[j]
        m = min(j + 1, fit.k)
        row = fit.theta[m]
        acc = np.zeros(d)
        for i in range(1, m + 1):
            acc += row[i - 1] @ resid[j + 1 - i]
        xhat[j + 1] = acc
    return xhat


def ma_autocov(theta, V) -> list:
    """Lag tables ``Gamma(0..q)`` of the VMA(q) ``x_j = e_j + sum_i theta_i e_{j-i}``."""
    theta = np.asarray(theta, dtype=float)
    V = np.asarray(V, dtype=float)
    q = theta.shape[0]
    full = [np.eye(V.shape[0])] + [theta[i] for i in range(q)]
    return [sum(full[i + h] @ V @ full[i].T for i in range(q - h + 1)) for h in range(q + 1)]


@dataclass
class FilterResult:
    """Exact innovations filter of a fitted VMA(q) run through a sample.

    ``resid[j]`` is the innovation of observation ``j`` with covariance
    ``V[j]``; ``xhat[n]`` is the prediction of the next observation.
    """

    xhat: np.ndarray
    resid: np.ndarray
    V: list
    loglik: float


def ma_filter(theta, V, scores, tol: float = 1e-12) -> FilterResult:
    """Run the innovations recursion of a VMA(q) model through ``scores``.

    The recursion uses the model's own autocovariances, so row ``m`` has at
    most ``q`` non-zero coefficients; once the rows stop changing (relative
    ``tol``) the stationary row is reused.
    """
    x = np.asarray(scores.scores if isinstance(scores, ScoreMatrix) else scores, float)
    n = x.shape[0]
    if n < 1:
        raise EmptySample("filter needs at least one observation")
    theta = np.asarray(theta, dtype=float).reshape(-1, x.shape[1], x.shape[1])
    q = theta.shape[0]
    d = x.shape[1]
    gam = ma_autocov(theta, V)
    scale = max(np.trace(gam[0]), 1e-300)

    Vs = [0.5 * (gam[0] + gam[0].T)]
    rows = [np.zeros((0, d, d))]
    Vinvs = []
    xhat = np.zeros((n + 1, d))
    resid = np.zeros((n, d))
    loglik = 0.0
    const = d * math.log(2 * math.pi)
    m = 0
    while m < n:
        sign, logdet = np.linalg.slogdet(Vs[m])
        if sign <= 0:
            raise SingularV("filter innovation covariance is not positive definite")
        Vinvs.append(np.linalg.inv(Vs[m]))
        resid[m] = x[m] - xhat[m]
        loglik -= 0.5 * (const + logdet + resid[m] @ Vinvs[m] @ resid[m])

        mm = m + 1
        width = min(mm, q)
        row = np.zeros((width, d, d))
        for i in range(mm - width, mm):
            acc = gam[mm - i].copy()
            for j in range(mm - width, i):
                acc -= row[mm - j - 1] @ Vs[j] @ rows[i][i - j - 1].T
            row[mm - i - 1] = acc @ Vinvs[i]
        Vnext = gam[0].copy()
        for j in range(mm - width, mm):
            t = row[mm - j - 1]
            Vnext -= t @ Vs[j] @ t.T
        Vnext = 0.5 * (Vnext + Vnext.T)
        prev = rows[-1]
        frozen = (
            prev.shape == row.shape
            and np.abs(Vnext - Vs[m]).max() <= tol * scale
            and np.abs(row - prev).max(initial=0.0) <= tol * (1.0 + np.abs(row).max(initial=0.0))
        )
        rows.append(row)
        Vs.append(Vnext)
        for i in range(1, width + 1):
            xhat[mm] += row[i - 1] @ resid[mm - i]
        m = mm
        if frozen:
            break

    if m < n:
        # stationary row from here on: same coefficients and covariance
        sign, logdet = np.linalg.slogdet(Vs[m])
        if sign <= 0:
            raise SingularV("filter innovation covariance is not positive definite")
        Vinv = np.linalg.inv(Vs[m])
        row = rows[-1]
        W = np.hstack(list(row)) if q else np.zeros((d, 0))
        for j in range(m, n):
            resid[j] = x[j] - xhat[j]
            if q:
                xhat[j + 1] = W @ resid[j + 1 - q: j + 1][::-1].ravel()
        r = resid[m:]
        quad = np.einsum("ij,jk,ik->", r, Vinv, r)
        loglik -= 0.5 * ((n - m) * (const + logdet) + quad)
        Vs.extend([Vs[m]] * (n - m))
    return FilterResult(xhat=xhat, resid=resid, V=Vs, loglik=float(loglik))


def predict_one_step(model: FmaModel, sample: FunctionalSample | np.ndarray):
    """Predict the next curve from a fitted model and an observed sample.

    ``sample`` holds raw (uncentered) coefficient rows. Returns
    ``(coefficients, scores)``: the predicted curve as a D-vector with the
    model mean added back, and its d-dimensional principal scores.
    """
    coeffs = sample.coeffs + sample.mean if isinstance(sample, FunctionalSample) else sample
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.size == 0 or coeffs.shape[0] < 1:
        raise EmptySample("prediction needs at least one observation")
    x = (coeffs - model.mean) @ model.eigvecs
    res = ma_filter(model.theta, model.V, x)
    xs = res.xhat[-1]
    return model.mean + model.eigvecs @ xs, xs
