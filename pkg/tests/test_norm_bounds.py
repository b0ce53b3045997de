import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pwbands import noise_free_bound, noisy_bound
from pwbands.errors import EmptyObservedIntervals, InvalidRisk, ValidationError
from pwbands.norm_bounds import hoeffding_term
from pwbands.sps import ObservedIntervals

risks = st.floats(1e-6, 1 - 1e-6)


def boxes(lo, hi):
    return ObservedIntervals(np.asarray(lo, float), np.asarray(hi, float), 0.05)


def test_noise_free_examples():
    b = noise_free_bound(np.zeros(10), 0.1, 0.01)
    assert b.value == pytest.approx(0.349307, abs=1e-6)
    assert b.sample_count == 10 and b.risk == 0.1 and b.delta0 == 0.01
    # 1 + sqrt(ln(10) / 200) = 1.1072983...; a hand-rounded 1.107295 is 3e-6 off
    value = noise_free_bound(np.ones(100), 0.1, 0.0).value
    assert value == pytest.approx(1 + math.sqrt(math.log(10) / 200), rel=1e-15)
    assert value == pytest.approx(1.107295, abs=5e-6)


def test_noise_free_formula(rng):
    ys = rng.uniform(-1, 1, 37)
    expected = np.mean(ys**2) + math.sqrt(math.log(0.2) / (-2 * 37)) + 0.03
    assert noise_free_bound(ys, 0.2, 0.03).value == pytest.approx(expected, rel=1e-14)


def test_alpha_to_one():
    ys = np.full(5, 0.5)
    assert noise_free_bound(ys, 1 - 1e-12, 0.1).value == pytest.approx(0.25 + 0.1, abs=1e-5)


def test_noisy_examples():
    b = noisy_bound(boxes(-np.ones(20), np.ones(20)), 0.05, 0.0)
    assert b.value == pytest.approx(1.273666, abs=1e-6)
    b = noisy_bound(boxes(np.zeros(4), np.zeros(4)), 0.05, 0.02)
    assert b.value == pytest.approx(hoeffding_term(0.05, 4) + 0.02, rel=1e-14)
    b = noisy_bound(boxes([-0.5], [0.3]), 0.05, 0.0)
    assert b.value - hoeffding_term(0.05, 1) == pytest.approx(0.25, rel=1e-14)


def test_noisy_accepts_duck_typed_intervals():
    obj = SimpleNamespace(lowers=[-0.2, 0.1], uppers=[0.4, 0.3], empty=False)
    assert noisy_bound(obj, 0.1, 0.0).value == pytest.approx(
        (0.16 + 0.09) / 2 + hoeffding_term(0.1, 2), rel=1e-14)


def test_noisy_unbounded_gives_infinite_budget():
    b = noisy_bound(boxes([-np.inf, 0.0], [np.inf, 0.1]), 0.1, 0.0)
    assert math.isinf(b.value)


def test_errors():
    for a in (0.0, 1.0, 1.5, -0.1, float("nan")):
        with pytest.raises(InvalidRisk):
            noise_free_bound([0.1], a, 0.0)
        with pytest.raises(InvalidRisk):
            noisy_bound(boxes([0.0], [0.0]), a, 0.0)
    with pytest.raises(EmptyObservedIntervals):
        noisy_bound(boxes(np.ones(3), -np.ones(3)), 0.1, 0.0)
    with pytest.raises(ValidationError):
        noise_free_bound([0.1], 0.1, -1.0)
    with pytest.raises(ValidationError):
        noise_free_bound([], 0.1, 0.0)


@given(risks, risks, st.integers(1, 500))
def test_monotone_in_risk(a1, a2, n):
    ys = np.linspace(-1, 1, n)
    lo, hi = sorted((a1, a2))
    assert noise_free_bound(ys, lo, 0.0).value >= noise_free_bound(ys, hi, 0.0).value


@given(risks, st.integers(1, 10_000))
def test_hoeffding_decreases_in_n(a, n):
    assert hoeffding_term(a, n + 1) < hoeffding_term(a, n)


@given(risks, st.integers(1, 200), st.floats(0, 1))
def test_budget_floor(a, n, d0):
    b = noise_free_bound(np.zeros(n), a, d0)
    assert b.value >= hoeffding_term(a, n)
