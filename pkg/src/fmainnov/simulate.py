"""FMA(q) functional time series in a Fourier coefficient space.

Innovations have independent Gaussian coordinates with standard deviations
``sigma_i`` (``1/i`` or ``2^-i``); each operator is a random Gaussian matrix
with entry standard deviations ``sigma_i sigma_i'``, rescaled to unit
spectral norm and multiplied by its weight ``kappa_l``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisSpec
from .core import FunctionalSample
from .errors import DegenerateDraw, NotInvertibleWarning, ValidationError

SIGMA_PROFILES = ("slow", "fast")


def make_rng(seed: int, rep: int | None = None) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``rep`` selects an independent child stream."""
    key = () if rep is None else (int(rep),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))


def sigma_profile(name: str, D: int) -> np.ndarray:
    i = np.arange(1, D + 1, dtype=float)
    if name == "slow":
        return 1.0 / i
    if name == "fast":
        return 2.0 ** -i
    raise ValidationError(f"unknown sigma profile {name!r}; expected one of {SIGMA_PROFILES}")


def spectral_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float), 2))


@dataclass(frozen=True)
class SimConfig:
    n: int
    D: int = 21
    q: int = 1
    kappas: tuple = (0.8,)
    sigma_profile: str = "fast"
    seed: int = 0

    def __post_init__(self):
        if self.D < 1 or self.n < 2 or self.q < 0:
            raise ValidationError("need D >= 1, n >= 2 and q >= 0")
        kappas = tuple(float(k) for k in self.kappas)
        if len(kappas) != self.q:
            raise ValidationError(f"expected {self.q} kappa weights, got {len(kappas)}")
        if any(k < 0 for k in kappas):
            raise ValidationError("kappa weights must be non-negative")
        object.__setattr__(self, "kappas", kappas)
        sigma_profile(self.sigma_profile, 1)

    @property
    def burn_in(self) -> int:
        return self.q

    @property
    def sigma(self) -> np.ndarray:
        return sigma_profile(self.sigma_profile, self.D)


@dataclass
class TrueModel:
    theta_true: list
    sigma: np.ndarray
    invertible: bool
    companion_radius: float
    theta_unit: list = field(default_factory=list, repr=False)

    @property
    def innovation_cov(self) -> np.ndarray:
        return np.diag(self.sigma ** 2)


def random_operator(D: int, sigma, rng: np.random.Generator) -> np.ndarray:
    """Gaussian D x D matrix with entry standard deviations ``sigma_i sigma_i'``, unit spectral norm."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (D,) or np.any(sigma <= 0):
        raise ValidationError("sigma must be a positive vector of length D")
    scale = np.outer(sigma, sigma)
    for _ in range(3):
        raw = rng.standard_normal((D, D)) * scale
        norm = spectral_norm(raw)
        if norm > 1e-300 and np.isfinite(norm):
            return raw / norm
    raise DegenerateDraw("random operator draw was numerically zero three times")


def companion_radius(thetas) -> float:
    """Spectral radius of the block companion matrix of ``I + sum_l theta_l z^l``.

    The moving average is invertible when this is below one.
    """
    thetas = [np.asarray(t, dtype=float) for t in thetas]
    if not thetas:
        return 0.0
    q = len(thetas)
    D = thetas[0].shape[0]
    comp = np.zeros((q * D, q * D))
    comp[:D, :] = -np.hstack(thetas)
    if q > 1:
        comp[D:, :-D] = np.eye((q - 1) * D)
    return float(np.abs(np.linalg.eigvals(comp)).max())


def simulate_from_operators(thetas, sigma, n: int, rng: np.random.Generator) -> np.ndarray:
    """``x_j = e_j + sum_l theta_l e_{j-l}`` for ``j = 1..n``; returns ``n x D`` coefficients.

    Draws ``n + q`` innovation vectors, the first ``q`` serving as burn-in.
    """
    sigma = np.asarray(sigma, dtype=float)
    q = len(thetas)
    eps = rng.standard_normal((n + q, sigma.size)) * sigma
    x = eps[q:].copy()
    for lag, theta in enumerate(thetas, start=1):
        x += eps[q - lag: q - lag + n] @ np.asarray(theta).T
    return x


def simulate_fma(config: SimConfig, rep: int | None = None):
    """Simulate one FMA(q) sample.

    Parameters
    ----------
    config : SimConfig
    rep : int, optional
        Replication index; each index gets an independent stream derived
        from ``config.seed``.

    Returns
    -------
    (FunctionalSample, TrueModel)
        The sample is not centered.
    """
    rng = make_rng(config.seed, rep)
    sigma = config.sigma
    unit = [random_operator(config.D, sigma, rng) for _ in range(config.q)]
    thetas = [k * t for k, t in zip(config.kappas, unit)]
    radius = companion_radius(thetas)
    if radius >= 1.0:
        warnings.warn(
            f"operator polynomial has companion spectral radius {radius:.4f} >= 1",
            NotInvertibleWarning,
            stacklevel=2,
        )
    x = simulate_from_operators(thetas, sigma, config.n, rng)
    sample = FunctionalSample(x, BasisSpec(config.D))
    truth = TrueModel(
        theta_true=thetas,
        sigma=sigma,
        invertible=radius < 1.0,
        companion_radius=radius,
        theta_unit=unit,
    )
    return sample, truth
