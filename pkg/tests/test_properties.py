"""Randomized invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fmainnov import io
from fmainnov.basis import BasisSpec, evaluate
from fmainnov.core import FunctionalSample, center, fpca, lag_cov
from fmainnov.innovations import beta_to_theta, fit_fma, innovations_algorithm
from fmainnov.simulate import make_rng, random_operator, sigma_profile, spectral_norm

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def sample_from(seed, n, D):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, D)) * rng.uniform(0.1, 2.0, D)
    x[1:] += 0.5 * x[:-1]
    return FunctionalSample(x)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(5, 60), st.integers(1, 8))
def test_covariance_psd_symmetric(seed, n, D):
    c = center(sample_from(seed, n, D))
    C = lag_cov(c, 0).op
    assert np.array_equal(C, C.T)
    assert np.linalg.eigvalsh(C).min() >= -1e-10 * max(1.0, np.trace(C))


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(3, 40), st.integers(1, 10))
def test_eigensystem(seed, n, D):
    c = center(sample_from(seed, n, D))
    C = lag_cov(c, 0).op
    eig = fpca(C)
    V = eig.vectors
    np.testing.assert_allclose(V.T @ V, np.eye(D), atol=1e-9)
    assert abs(eig.values.sum() - np.trace(C)) < 1e-9 * max(1.0, np.trace(C))
    assert np.all(np.diff(eig.values) <= 1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(30, 200), st.integers(1, 3), st.integers(1, 5))
def test_trace_v_monotone(seed, n, d, k):
    x = center(sample_from(seed, n, d)).coeffs
    fit = innovations_algorithm(x, k)
    tr = [np.trace(v) for v in fit.V]
    assert all(b <= a + 1e-9 * tr[0] for a, b in zip(tr, tr[1:]))


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(30, 200), st.integers(1, 3), st.integers(1, 5))
def test_beta_link_equivalence(seed, n, d, k):
    x = center(sample_from(seed, n, d)).coeffs
    a = innovations_algorithm(x, k).theta
    b = beta_to_theta(x, k)
    for m in range(1, k + 1):
        np.testing.assert_allclose(a[m], b[m], atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 25), st.sampled_from(["slow", "fast"]))
def test_random_operator_norm(seed, D, profile):
    a = random_operator(D, sigma_profile(profile, D), make_rng(seed))
    assert abs(spectral_norm(a) - 1.0) < 1e-10


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 15))
def test_parseval(seed, D):
    # on a uniform grid with more points than frequencies the basis is orthonormal
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((2, D))
    m = 4 * D + 4
    t = np.arange(m) / m
    fa, fb = evaluate(a, t, BasisSpec(D)), evaluate(b, t, BasisSpec(D))
    assert abs(np.mean(fa * fb) - a @ b) < 1e-9 * (1 + np.abs(a).sum() * np.abs(b).sum())


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(1, 3), st.integers(0, 2))
def test_model_roundtrip(seed, d, q):
    model = fit_fma(sample_from(seed, 60, 5), d, q)
    back = io.model_from_dict(io.model_to_dict(model))
    for name in ("eigvecs", "theta", "V", "mean", "eigvals_all"):
        np.testing.assert_allclose(getattr(back, name), getattr(model, name), rtol=0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds, st.integers(0, 50))
def test_seeded_determinism(seed, rep):
    a = make_rng(seed, rep).standard_normal(5)
    b = make_rng(seed, rep).standard_normal(5)
    assert np.array_equal(a, b)
