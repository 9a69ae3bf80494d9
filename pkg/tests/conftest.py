import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_kraus(rng, dim, n=3):
    # rows of a random isometry V: C^dim -> C^(n dim)
    v = random_unitary(rng, n * dim)[:, :dim]
    return [v[k * dim:(k + 1) * dim] for k in range(n)]


ACCEPTANCE_LINES: list[str] = []


def report(k: int, ok: bool, detail: str) -> None:
    """Record one acceptance line; shown again in the terminal summary."""
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} | {detail}"
    print(line, flush=True)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
