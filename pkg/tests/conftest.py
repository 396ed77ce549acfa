import functools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def kron_string(factors, n):
    """Dense Pauli string; site b is bit b of the basis index (site 0 least significant)."""
    mats = [PAULI["I"]] * n
    for site, lab in factors:
        mats[site] = mats[site] @ PAULI[lab]
    return functools.reduce(np.kron, [mats[b] for b in reversed(range(n))])


def kron_expr(terms, n):
    m = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for coeff, factors in terms:
        m += coeff * kron_string(factors, n)
    return m


def dense_fermion_ops(n_modes):
    """Jordan-Wigner-free construction of c_j via explicit occupation-number action."""
    dim = 2 ** n_modes
    ops = []
    for j in range(n_modes):
        c = np.zeros((dim, dim))
        for state in range(dim):
            if state >> j & 1:
                sign = (-1) ** bin(state & ((1 << j) - 1)).count("1")
                c[state ^ (1 << j), state] = sign
        ops.append(c)
    return ops


def correlator_rdm(state_full, n, i, j):
    """Two-site RDM from the 16 correlators <s^a_i s^b_j>, each from a kron matrix."""
    rho = np.zeros((4, 4), dtype=complex)
    for la, pa in PAULI.items():
        for lb, pb in PAULI.items():
            op = kron_string([(i, la), (j, lb)] if i != j else [(i, la)], n)
            val = np.vdot(state_full, op @ state_full)
            rho += val * np.kron(pa, pb) / 4
    return rho


def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
