import numpy as np
import pytest

from entwitness.qstate import random_density


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def random_states():
    """200 seeded full-rank two-qubit states (the acceptance ensemble)."""
    return [random_density(np.random.default_rng(1000 + i)) for i in range(200)]


def wootters_brute(rho):
    """Concurrence from a direct eigenvalue computation, with no shared helpers."""
    sy = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(sy, sy)
    R = rho @ yy @ rho.conj() @ yy
    ev = np.sort(np.sqrt(np.abs(np.linalg.eigvals(R).real)))[::-1]
    return max(0.0, ev[0] - ev[1] - ev[2] - ev[3])


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
