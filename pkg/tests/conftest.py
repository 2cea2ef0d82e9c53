import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def grid_membership(x, a, b, c, left=False, right=False):
    """Independent numpy triangle used by the integration oracles."""
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x)
    if b > a:
        y = np.where((x > a) & (x < b), (x - a) / (b - a), y)
    if c > b:
        y = np.where((x > b) & (x < c), (c - x) / (c - b), y)
    y = np.where(x == b, 1.0, y)
    if left:
        y = np.where(x <= b, 1.0, y)
    if right:
        y = np.where(x >= b, 1.0, y)
    return y


def grid_centroid(levels, term_set, n=10_001):
    x = np.linspace(term_set.lo, term_set.hi, n)
    env = np.zeros_like(x)
    last = len(term_set.terms) - 1
    for k, (lv, t) in enumerate(zip(levels, term_set.terms)):
        mu = grid_membership(x, t.a, t.b, t.c, k == 0, k == last)
        env = np.maximum(env, np.minimum(mu, lv))
    return np.trapezoid(x * env, x) / np.trapezoid(env, x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
