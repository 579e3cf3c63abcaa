import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hodebias.elements import Element

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def rand_spd(rng, d, cond=4.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    ev = np.linspace(1.0, cond, d)
    return (Q * ev) @ Q.T


def rand_sym(rng, d, scale=1.0):
    M = rng.standard_normal((d, d)) * scale
    return 0.5 * (M + M.T)


def dense(M):
    return Element.dense(M)


def rand_pair(rng, d, scale=1.0, spd=False):
    mat = rand_spd(rng, d) if spd else rand_sym(rng, d, scale)
    return Element.pair(mat, rng.standard_normal(d) * scale)


def rel_err(a, b, floor=1e-300):
    return abs(a - b) / max(abs(a), abs(b), floor)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
