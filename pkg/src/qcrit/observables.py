"""Expectation values, Bloch vectors and few-site reduced density matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import QuantumState
from .operators import OperatorExpression


def expectation(expr, state: QuantumState, imag_tol=1e-10) -> float:
    """Real expectation value of a Hermitian operator."""
    if not expr.is_hermitian():
        raise ValueError("expectation() needs a Hermitian operator")
    # out-of-sector images are orthogonal to the state, so dropping them is exact
    kernel = expr.compile(state.sector, strict=False)
    val = np.vdot(state.amplitudes, kernel.matvec(state.amplitudes))
    if abs(val.imag) > imag_tol:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    @property
    def norm(self):
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))


def bloch_vector(state: QuantumState, site: int) -> BlochVector:
    n = state.n_sites
    comps = [expectation(OperatorExpression.pauli(lab, site, n), state) for lab in "XYZ"]
    return BlochVector(*comps)


@dataclass(frozen=True, eq=False)
class ReducedDensityMatrix:
    """State of a block of 1 or 2 sites (modes); the first retained index is
    the most significant bit of the row index."""

    matrix: np.ndarray
    sites: tuple
    tolerance: float = 1e-10

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise ValueError(f"RDM must be 2x2 or 4x4, got shape {m.shape}")
        if m.shape[0] != 2 ** len(self.sites):
            raise ValueError("RDM dimension does not match the retained block")
        tol = self.tolerance
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("RDM is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"RDM trace {np.trace(m).real:.12g} differs from 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -tol:
            raise ValueError(f"RDM has negative eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def _gather_bits(states, positions):
    """Pack the bits of ``states`` at ``positions`` (first = most significant)."""
    out = np.zeros_like(states)
    for p in positions:
        out = (out << 1) | ((states >> p) & 1)
    return out


def reduced_density_matrix(state: QuantumState, sites) -> ReducedDensityMatrix:
    """Partial trace over every site not in ``sites``.

    Works on the sector basis directly: amplitudes are scattered into a
    (block x complement) matrix ``M`` and ``rho = M M^dag``.
    """
    if state.sector.is_collective:
        raise ValueError("collective states carry no site structure")
    n = state.n_sites
    sites = tuple(int(s) for s in sites)
    if not 1 <= len(sites) <= 2 or len(set(sites)) != len(sites):
        raise ValueError("retain one site or two distinct sites")
    for s in sites:
        if not 0 <= s < n:
            raise ValueError(f"site {s} out of range for {n} sites")
    rest = [p for p in range(n) if p not in sites]
    basis = state.sector.basis
    rows = _gather_bits(basis, sites)
    cols = _gather_bits(basis, rest)
    m = np.zeros((2 ** len(sites), 2 ** len(rest)), dtype=np.complex128)
    m[rows, cols] = state.amplitudes
    return ReducedDensityMatrix(m @ m.conj().T, sites)


def xxz_pair_rdm_from_energy(eps, d1, delta, sites=(0, 1)) -> ReducedDensityMatrix:
    """Nearest-neighbour RDM of a zero-magnetization XXZ ground state from
    the energy per site and its derivative with respect to the anisotropy."""
    a = d = 0.25 * (1 - 2 * d1)
    b = 0.25 * (1 + 2 * d1)
    c = -0.5 * (eps - delta * d1)
    m = np.array([[a, 0, 0, 0],
                  [0, b, c, 0],
                  [0, c, b, 0],
                  [0, 0, 0, d]], dtype=float)
    return ReducedDensityMatrix(m, sites, tolerance=1e-8)


def hubbard_site_spectrum(state: QuantumState, site=0):
    """(w, u_up, u_down, z): probabilities of a doubly occupied, singly
    occupied (up / down) and empty site."""
    n = state.n_sites
    up, dn = 2 * site, 2 * site + 1

    def num(mode):
        return OperatorExpression(n, [(0.5, ()), (-0.5, ((mode, "Z"),))])

    w = expectation(num(up) * num(dn), state)
    u_up = expectation(num(up), state) - w
    u_dn = expectation(num(dn), state) - w
    return w, u_up, u_dn, 1 - u_up - u_dn - w

