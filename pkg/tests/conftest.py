import numpy as np
import pytest

from esqpt.eigen import eigh_tridiagonal
from esqpt.model import ModelParams, build_hamiltonian


def spin_matrices(N):
    """Dense J_x, J_z for spin j = N/2 in the |j, m> basis, m ascending."""
    j = N / 2
    m = np.arange(-j, j + 1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1)), -1)  # J+ raises m
    jx = 0.5 * (jp + jp.T)
    return jx, np.diag(m)


def dense_lmg(N, alpha, lam=0.0):
    """Full (N+1)-dimensional Hamiltonian, both parities."""
    jx, jz = spin_matrices(N)
    eye = np.eye(N + 1)
    return -4.0 * (1.0 - alpha) / N * jx @ jx + (alpha + lam) * (jz + N / 2 * eye)


def even_block_dense(N, alpha, lam=0.0):
    """Even-parity block of dense_lmg (m = -j, -j+2, ...)."""
    return dense_lmg(N, alpha, lam)[::2, ::2]


def decompose(N, alpha, lam=0.0):
    return eigh_tridiagonal(build_hamiltonian(ModelParams(N, alpha, lam)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# ------------------------------------------------------------- shared scans
# Scans are deterministic and expensive, so each (alpha, N, window) is run
# once per session and shared by the acceptance and scan tests.

_SCANS = {}


def cached_scan(alpha, N, window):
    from esqpt.scan import lambda_scan

    key = (alpha, N, window)
    if key not in _SCANS:
        _SCANS[key] = lambda_scan(alpha, N, window=window)
    return _SCANS[key]


# ------------------------------------------------------ acceptance summary

ACCEPTANCE = []


@pytest.fixture
def record():
    def _record(criterion, passed, detail):
        ACCEPTANCE.append((criterion, bool(passed), detail))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE, key=lambda r: str(r[0])):
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}")
