import numpy as np
import pytest
from hypothesis import settings

from pwbands import KernelParams

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def params():
    return KernelParams(30.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def spread_points(rng, n, gap=0.02):
    """n inputs in [0, 1] at least ``gap`` apart (keeps Gramians well conditioned)."""
    slack = 1.0 - (n - 1) * gap
    assert slack > 0
    x = np.sort(rng.uniform(0.0, slack, n)) + gap * np.arange(n)
    return rng.permutation(x)


_ACCEPTANCE: dict[int, str] = {}


def report(criterion: int, passed: bool, detail: str) -> None:
    """Record the verdict line of one acceptance criterion."""
    _ACCEPTANCE[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[key])
