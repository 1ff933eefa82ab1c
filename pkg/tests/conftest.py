from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dsquiver.frontend import DSInstance

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, ok: bool, detail: str) -> str:
    line = f"ACCEPTANCE {criterion:>2}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(ACCEPTANCE_LINES)):
            terminalreporter.write_line(line)


def additive_pm(a) -> DSInstance:
    """k classes of rank 2 with spectra {a_i, -a_i}."""
    return DSInstance("additive", [[(float(x), 0.0, 1), (-float(x), 0.0, 1)] for x in a])


def multiplicative_pm(a) -> DSInstance:
    """k classes of rank 2 with spectra {exp(2 pi i a), exp(-2 pi i a)}."""
    out = []
    for x in a:
        c, s = float(np.cos(2 * np.pi * x)), float(np.sin(2 * np.pi * x))
        out.append([(c, s, 1), (c, -s, 1)])
    return DSInstance("multiplicative", out)


def additive_generic(n: int, k: int, rng: np.random.Generator) -> DSInstance:
    """k classes with n distinct complex eigenvalues each, total trace zero."""
    ev = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
    ev -= ev.sum() / (n * k)
    return DSInstance("additive", [[(z.real, z.imag, 1) for z in row] for row in ev])


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
