"""Comparator FMA(1) estimators built on the quadratic operator equation

    theta^2 C_1^T - theta C_0 + C_1 = 0,

where ``C_0`` and ``C_1`` are the lag-0 and lag-1 covariance tables. Both
work in the leading d estimated eigencoordinates and embed the result back
into the basis space.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import EigenSystem, FunctionalSample, center, fpca, lag_cov
from .errors import NoConvergenceWarning, RankExceeded
from .innovations import FmaModel, _right_inverse
from .simulate import spectral_norm


@dataclass
class Fma1Estimate:
    theta_hat: np.ndarray
    embedded: np.ndarray
    method: str
    eigvecs: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)


def _projected(sample, d, eig):
    if not sample.centered:
        sample = center(sample)
    if eig is None:
        eig = fpca(lag_cov(sample, 0))
    if d < 1 or d > eig.rank:
        raise RankExceeded(f"d = {d} outside 1..{eig.rank}")
    E = eig.vectors[:, :d]
    C0 = E.T @ lag_cov(sample, 0).op @ E
    C1 = E.T @ lag_cov(sample, 1).op @ E
    return E, 0.5 * (C0 + C0.T), C1


def admissible_root(lam: float, c: float):
    """Solve ``c x^2 - lam x + c = 0`` on the invertible side.

    The two roots multiply to one, so at most one real root lies strictly
    inside (-1, 1). Returns ``(x, ok)``; when the roots are a complex pair
    (both of modulus one) ``x`` is their common real part ``lam / 2c`` and
    ``ok`` is False.
    """
    if c == 0.0:
        return 0.0, True
    if lam <= 0.0:
        return 0.0, False
    disc = lam * lam - 4.0 * c * c
    if disc < 0.0:
        return lam / (2.0 * c), False
    x = 2.0 * c / (lam + np.sqrt(disc))
    return x, abs(x) < 1.0


def fma1_projection(sample: FunctionalSample, d: int, eig: EigenSystem | None = None) -> Fma1Estimate:
    """Solve the quadratic separately along each of the first ``d`` eigenfunctions.

    Exact only when the operator commutes with the innovation covariance.
    Directions without a real root inside (-1, 1) are flagged and use the
    fallback of :func:`admissible_root`.
    """
    E, C0, C1 = _projected(sample, d, eig)
    roots = np.zeros(d)
    flags = []
    for i in range(d):
        roots[i], ok = admissible_root(C0[i, i], C1[i, i])
        flags.append(not ok)
    theta = np.diag(roots)
    resid = theta @ theta @ C1.T - theta @ C0 + C1
    return Fma1Estimate(
        theta_hat=theta,
        embedded=E @ theta @ E.T,
        method="projection",
        eigvecs=E,
        diagnostics={
            "iterations": 0,
            "residual_norm": float(np.linalg.norm(resid)),
            "no_admissible_root": flags,
        },
    )


def fma1_iterative(sample: FunctionalSample, d: int, tol: float = 1e-8, max_iter: int = 500,
                   eig: EigenSystem | None = None) -> Fma1Estimate:
    """Fixed-point iteration ``theta <- (C_1 + theta^2 C_1^T) C_0^{-1}`` from ``theta = 0``.

    Stops when successive iterates differ by less than ``tol`` (Frobenius
    norm). The map is not a contraction in general; if it runs away (entries
    beyond ``1e6``) or hits ``max_iter``, the iterate with the smallest
    equation residual seen so far is returned and ``converged`` is False.
    """
    E, C0, C1 = _projected(sample, d, eig)

    def residual(t):
        return np.linalg.norm(t @ t @ C1.T - t @ C0 + C1)

    theta = np.zeros((d, d))
    best, best_res = theta, residual(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = _right_inverse(C1 + theta @ theta @ C1.T, C0)
        if not np.all(np.isfinite(nxt)) or np.abs(nxt).max() > 1e6:
            break
        step = np.linalg.norm(nxt - theta)
        theta = nxt
        res = residual(theta)
        if res < best_res:
            best, best_res = theta, res
        if step < tol:
            converged = True
            break
    theta = theta if converged else best
    if not converged:
        warnings.warn(
            f"fixed-point iteration stopped after {it} steps without converging",
            NoConvergenceWarning,
            stacklevel=2,
        )
    resid = theta @ theta @ C1.T - theta @ C0 + C1
    return Fma1Estimate(
        theta_hat=theta,
        embedded=E @ theta @ E.T,
        method="iterative",
        eigvecs=E,
        diagnostics={
            "iterations": it,
            "residual_norm": float(np.linalg.norm(resid)),
            "converged": converged,
        },
    )


def fma1_innovations(model: FmaModel) -> Fma1Estimate:
    """Wrap the first coefficient of a fitted FMA model as an ``Fma1Estimate``."""
    theta = model.theta[0]
    return Fma1Estimate(
        theta_hat=theta,
        embedded=model.embedded_theta(1),
        method="innovations",
        eigvecs=model.eigvecs,
        diagnostics={"k_used": model.k_used},
    )


def estimation_error(true_theta, est) -> float:
    """Spectral norm of ``true_theta`` minus the embedded estimate."""
    if isinstance(est, Fma1Estimate):
        est = est.embedded
    elif isinstance(est, FmaModel):
        est = est.embedded_theta(1)
    return spectral_norm(np.asarray(true_theta) - np.asarray(est))
