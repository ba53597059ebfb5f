"""Centering, lag covariances, functional principal components and scores.

Lag-h covariance tables follow the operator convention: the table of
``C_{X;h}`` acting on coefficient vectors is ``E[x_{j+h} x_j^T]``, so for a
moving average ``x_j = theta e_{j-1} + e_j`` the lag-1 table is
``theta @ C_e``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .basis import BasisSpec
from .errors import (
    ConvergenceFailure,
    InvalidFraction,
    LagTooLarge,
    NonFiniteInput,
    NotCentered,
    NotSymmetric,
    RankExceeded,
    ValidationError,
)


@dataclass(frozen=True)
class FunctionalSample:
    """``n`` curves stored as rows of basis coefficients."""

    coeffs: np.ndarray
    basis: BasisSpec = None
    mean: np.ndarray = None
    centered: bool = False

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if coeffs.shape[0] < 2:
            raise ValidationError("a functional sample needs at least two curves")
        if not np.all(np.isfinite(coeffs)):
            raise NonFiniteInput("sample coefficients must be finite")
        basis = self.basis if self.basis is not None else BasisSpec(coeffs.shape[1])
        if basis.dim != coeffs.shape[1]:
            raise ValidationError(
                f"coefficient table has {coeffs.shape[1]} columns, basis has {basis.dim}"
            )
        mean = np.zeros(basis.dim) if self.mean is None else np.asarray(self.mean, float)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "mean", mean)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class LagCov:
    h: int
    op: np.ndarray


@dataclass(frozen=True)
class EigenSystem:
    """Leading eigenpairs of a symmetric table.

    ``vectors[:, i]`` pairs with ``values[i]``; ``total_trace`` is the sum of
    all eigenvalues, including the ones not retained.
    """

    values: np.ndarray
    vectors: np.ndarray
    total_trace: float
    all_values: np.ndarray = field(default=None, repr=False)

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class ScoreMatrix:
    scores: np.ndarray

    @property
    def d(self) -> int:
        return self.scores.shape[1]

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def center(sample: FunctionalSample) -> FunctionalSample:
    """Subtract the column means; the removed mean accumulates in ``sample.mean``."""
    mu = sample.coeffs.mean(axis=0)
    return replace(
        sample,
        coeffs=sample.coeffs - mu,
        mean=sample.mean + mu,
        centered=True,
    )


def lagged_cov(x, h: int, divisor: str = "n-h") -> np.ndarray:
    """``sum_j x_{j+h} x_j^T`` over the available pairs, scaled by ``divisor``.

    ``divisor`` is ``"n-h"`` (number of pairs) or ``"n"``. No centering is
    applied.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if h < 0 or h > n - 1:
        raise LagTooLarge(f"lag {h} not available for {n} observations")
    prod = x[h:].T @ x[: n - h]
    return prod / (n - h if divisor == "n-h" else n)


def lag_cov(sample: FunctionalSample, h: int) -> LagCov:
    """Empirical lag-h covariance table with divisor ``n - h``."""
    if not sample.centered:
        raise NotCentered("lag covariances require a centered sample")
    if h < 0 or h > sample.n - 2:
        raise LagTooLarge(f"lag {h} exceeds n - 2 = {sample.n - 2}")
    op = lagged_cov(sample.coeffs, h)
    if h == 0:
        op = 0.5 * (op + op.T)
    return LagCov(h, op)


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``tol * max(|trace|, ||a||_F)``. Returns unsorted ``(values, vectors)``.
    """
    A = np.array(a, dtype=float)
    m = A.shape[0]
    V = np.eye(m)
    scale = max(abs(np.trace(A)), np.linalg.norm(A))
    if m == 1 or scale == 0.0:
        return np.diag(A).copy(), V
    target = tol * scale
    iu = np.triu_indices(m, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(A[iu] ** 2))
        if off < target:
            return np.diag(A).copy(), V
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                ap = A[:, p].copy()
                aq = A[:, q]
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :]
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    off = np.sqrt(2.0 * np.sum(A[iu] ** 2))
    if off < target:
        return np.diag(A).copy(), V
    raise ConvergenceFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def _fix_signs(vectors):
    # largest-magnitude coordinate of each column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def fpca(cov, r: int | None = None) -> EigenSystem:
    """Eigen-decompose a lag-0 covariance table and keep the leading ``r`` pairs.

    Parameters
    ----------
    cov : LagCov or array_like
        Symmetric ``D x D`` table. A ``LagCov`` must have ``h == 0``.
    r : int, optional
        Number of eigenpairs to retain; all ``D`` by default.

    Returns
    -------
    EigenSystem
        Eigenvalues in non-increasing order. Each eigenvector is scaled so its
        largest-magnitude coordinate is positive; exact ties in eigenvalue are
        ordered by the (sign-fixed) vectors, lexicographically descending.
    """
    if isinstance(cov, LagCov):
        if cov.h != 0:
            raise ValidationError("fpca expects the lag-0 covariance")
        cov = cov.op
    C = np.asarray(cov, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValidationError("fpca expects a square table")
    if not np.all(np.isfinite(C)):
        raise NonFiniteInput("covariance table must be finite")
    D = C.shape[0]
    if r is None:
        r = D
    if not 1 <= r <= D:
        raise RankExceeded(f"requested rank {r} outside 1..{D}")
    scale = max(1.0, np.abs(C).max())
    if np.abs(C - C.T).max() > 1e-10 * scale:
        raise NotSymmetric("covariance table is not symmetric")
    C = 0.5 * (C + C.T)

    values, vectors = jacobi_eigh(C)
    vectors = _fix_signs(vectors)
    order = sorted(range(D), key=lambda i: (-values[i], tuple(-vectors[:, i])))
    values = values[order]
    vectors = vectors[:, order]
    # round-off negatives of a PSD table
    small = 1e-8 * (1.0 + abs(values[0]))
    values = np.where((values < 0) & (values > -small), 0.0, values)
    return EigenSystem(
        values=values[:r].copy(),
        vectors=vectors[:, :r].copy(),
        total_trace=float(values.sum()),
        all_values=values,
    )


def tve(eig: EigenSystem, P: float) -> int:
    """Smallest number of leading eigenvalues whose share of the trace reaches ``P``."""
    if not 0.0 < P < 1.0:
        raise InvalidFraction(f"explained-variance fraction must lie in (0, 1), got {P}")
    vals = eig.all_values if eig.all_values is not None else eig.values
    share = np.cumsum(vals) / eig.total_trace
    hits = np.nonzero(share >= P - 1e-12)[0]
    return int(hits[0]) + 1 if hits.size else len(vals)


def scores(sample: FunctionalSample, eig: EigenSystem, d: int) -> ScoreMatrix:
    """Coordinates of each curve on the first ``d`` eigenvectors."""
    if d < 1 or d > eig.rank:
        raise RankExceeded(f"d = {d} exceeds the {eig.rank} available eigenvectors")
    return ScoreMatrix(sample.coeffs @ eig.vectors[:, :d])
