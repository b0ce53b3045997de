import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from pwbands import KernelParams, gram, kernel, psd_sqrt
from pwbands.errors import DuplicateInputs, IllConditioned, InvalidParams, NotPSD
from pwbands.kernel import cholesky_checked, cross_kernel, kernel_eval, solve_spd

from conftest import spread_points

reals = st.floats(-5, 5, allow_nan=False)


def test_diagonal_value(params):
    assert kernel_eval(0.3, 0.3, params) == pytest.approx(30 / math.pi, rel=1e-15)
    assert kernel_eval(0.3, 0.3, params) == pytest.approx(9.549297, abs=1e-6)


def test_zero_crossing(params):
    assert abs(kernel_eval(math.pi / 30, 0.0, params)) < 1e-15


def test_known_value(params):
    assert kernel_eval(0.1, 0.0, params) == pytest.approx(math.sin(3) / (0.1 * math.pi), rel=1e-14)
    assert kernel_eval(0.1, 0.0, params) == pytest.approx(0.449200, abs=2e-6)  # printed to six places


def test_fourier_representation(params):
    # k(z, s) = (1 / 2 pi) * integral over [-eta, eta] of exp(i w (z - s))
    for h in (0.013, 0.2, 0.77, -1.4):
        val, _ = quad(lambda w: math.cos(w * h), 0.0, params.eta, limit=200)
        assert kernel_eval(h, 0.0, params) == pytest.approx(val / math.pi, rel=1e-10, abs=1e-12)


def test_continuity_at_diagonal(params):
    assert abs(kernel_eval(0.4, 0.4 + 1e-9, params) - params.diag) <= 1e-9
    # both branches agree at the switch point
    h = 1e-7
    closed = math.sin(params.eta * h) / (math.pi * h)
    assert kernel_eval(h, 0.0, params) == pytest.approx(closed, rel=1e-14)


@given(reals, reals)
def test_symmetric_and_bounded(z, s):
    p = KernelParams(30.0)
    a, b = kernel_eval(z, s, p), kernel_eval(s, z, p)
    assert a == b
    assert abs(a) <= p.diag
    if z != s and abs(z - s) > 1e-3:
        assert abs(a) < p.diag


def test_invalid_eta():
    for eta in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(InvalidParams):
            KernelParams(eta)


def test_gram_examples(params):
    G = gram([0.5], params)
    assert G.entries.shape == (1, 1) and G.entries[0, 0] == pytest.approx(params.diag)
    G = gram([0.0, math.pi / 30], params)
    assert abs(G.entries[0, 1]) < 1e-15
    assert np.allclose(np.diag(G.entries), params.diag)
    G = gram(np.random.default_rng(0).uniform(size=3), params)
    assert np.array_equal(G.entries, G.entries.T)


def test_gram_duplicates(params):
    with pytest.raises(DuplicateInputs):
        gram([0.1, 0.5, 0.1 + 1e-10], params)


@given(st.integers(1, 12), st.integers(0, 10_000))
def test_gram_positive_definite(n, seed):
    rng = np.random.default_rng(seed)
    G = gram(spread_points(rng, n, 0.01), KernelParams(30.0))
    assert G.is_positive_definite()
    assert np.all(np.diag(G.cholesky) > 0)


def test_gram_ill_conditioned(params):
    G = gram([0.2, 0.2 + 2e-9, 0.7], params)
    assert not G.is_positive_definite()
    with pytest.raises(IllConditioned):
        solve_spd(G, np.ones(3))


def test_solve_spd_examples(params):
    G = gram([0.5], params)
    assert solve_spd(G, [1.0]) == pytest.approx([math.pi / 30])
    G = gram([0.1, 0.4, 0.9], params)
    assert np.array_equal(solve_spd(G, np.zeros(3)), np.zeros(3))


def test_solve_spd_residuals(params):
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = rng.integers(2, 9)
        G = gram(spread_points(rng, n, 0.03), params)
        rhs = rng.normal(size=n)
        w = solve_spd(G, rhs)
        assert np.linalg.norm(G.entries @ w - rhs) <= 1e-8 * (np.linalg.norm(rhs) + 1)


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    rng = np.random.default_rng(2)
    for _ in range(20):
        A = rng.normal(size=(5, 5))
        M = A.T @ A
        S = psd_sqrt(M)
        assert np.array_equal(S, S.T)
        assert np.linalg.norm(S @ S - M) / np.linalg.norm(M) <= 1e-8


def test_psd_sqrt_clips_roundoff_and_rejects_indefinite():
    M = np.diag([1.0, -1e-13])
    assert np.allclose(psd_sqrt(M), np.diag([1.0, 0.0]))
    with pytest.raises(NotPSD):
        psd_sqrt(np.diag([1.0, -1e-3]))


def test_cholesky_checked_pivot_threshold(params):
    K = cross_kernel(np.array([0.3, 0.3 + 1e-8]), np.array([0.3, 0.3 + 1e-8]), params)
    with pytest.raises(IllConditioned):
        cholesky_checked(K, params.diag)


def test_vectorised_kernel_matches_scalar(params):
    rng = np.random.default_rng(3)
    z, s = rng.uniform(size=50), rng.uniform(size=50)
    vec = kernel(z, s, params)
    assert np.array_equal(vec, [kernel_eval(a, b, params) for a, b in zip(z, s)])
