"""Pauli-string operator algebra and its action on restricted bases.

Operators are stored symbolically as weighted Pauli strings and compiled, per
basis sector, into gather kernels: for every distinct X-mask the kernel keeps
the target row index and the accumulated phase factor of each source state.
No matrix in the many-body basis is ever formed by ``apply``.

Conventions: ``Z|0> = |0>``, ``Z|1> = -|1>``, ``Y|0> = i|1>``,
``Y|1> = -i|0>``; fermionic occupation 1 is bit value 1.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from numbers import Number
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .basis import BasisSector, QuantumState, popcount
from .errors import SectorViolation

LABELS = ("I", "X", "Y", "Z")

# a * b = phase * c on one site
_PRODUCT = {
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}


def multiply_labels(a: str, b: str) -> tuple[complex, str]:
    if a == "I":
        return 1, b
    if b == "I":
        return 1, a
    if a == b:
        return 1, "I"
    return _PRODUCT[(a, b)]


def _clean(c):
    c = complex(c)
    return c.real if c.imag == 0.0 else c


@dataclass(frozen=True)
class OperatorTerm:
    """``coeff`` times a product of single-site Paulis on increasing sites."""

    coeff: complex
    factors: tuple = ()

    def masks(self) -> tuple[int, int, int]:
        """(flip mask, phase mask, number of Y factors)."""
        x = z = ny = 0
        for site, label in self.factors:
            bit = 1 << site
            if label in ("X", "Y"):
                x |= bit
            if label in ("Z", "Y"):
                z |= bit
            ny += label == "Y"
        return x, z, ny

    def label(self) -> str:
        return " ".join(f"{lab}{site}" for site, lab in self.factors) or "I"


def _reduce_factors(factors, n_sites):
    """Multiply out repeated sites, drop identities, sort by site."""
    phase = 1
    by_site: dict[int, str] = {}
    for site, label in factors:
        site = int(site)
        label = str(label).upper()
        if label not in LABELS:
            raise ValueError(f"unknown Pauli label {label!r}")
        if not 0 <= site < n_sites:
            raise ValueError(f"site {site} out of range for {n_sites} sites")
        ph, by_site[site] = multiply_labels(by_site.get(site, "I"), label)
        phase *= ph
    key = tuple((s, by_site[s]) for s in sorted(by_site) if by_site[s] != "I")
    return phase, key


def parse_pauli(text: str) -> tuple:
    """``"X0 Z1 X2"`` -> ((0, 'X'), (1, 'Z'), (2, 'X'))."""
    out = []
    for tok in text.split():
        m = re.fullmatch(r"([IXYZixyz])(\d+)", tok)
        if not m:
            raise ValueError(f"bad Pauli factor {tok!r}")
        out.append((int(m.group(2)), m.group(1).upper()))
    return tuple(out)


class OperatorExpression:
    """Canonical weighted sum of Pauli strings on ``n_sites`` qubits.

    Construction always canonicalizes: factors are sorted by site, like
    terms are merged, and terms with |coeff| <= ``atol`` are dropped.
    Instances are immutable and hashable.
    """

    __slots__ = ("n_sites", "terms", "_hash")

    def __init__(self, n_sites: int, terms: Iterable = (), atol: float = 1e-14):
        if n_sites < 1:
            raise ValueError("operator needs at least one site")
        acc: dict[tuple, complex] = {}
        for t in terms:
            if isinstance(t, OperatorTerm):
                coeff, factors = t.coeff, t.factors
            else:
                coeff, factors = t
                if isinstance(factors, str):
                    factors = parse_pauli(factors)
            if not isinstance(coeff, Number) or not np.isfinite(complex(coeff)):
                raise ValueError(f"non-finite coefficient {coeff!r}")
            phase, key = _reduce_factors(factors, n_sites)
            acc[key] = acc.get(key, 0) + complex(coeff) * phase
        canon = tuple(
            OperatorTerm(_clean(c), key)
            for key, c in sorted(acc.items(), key=lambda kv: _sort_key(kv[0]))
            if abs(c) > atol
        )
        object.__setattr__(self, "n_sites", int(n_sites))
        object.__setattr__(self, "terms", canon)
        object.__setattr__(self, "_hash", hash((self.n_sites, canon)))

    def __setattr__(self, name, value):
        raise AttributeError("OperatorExpression is immutable")

    # constructors -------------------------------------------------------

    @classmethod
    def identity(cls, n_sites, coeff=1.0):
        return cls(n_sites, [(coeff, ())])

    @classmethod
    def pauli(cls, label, site, n_sites, coeff=1.0):
        return cls(n_sites, [(coeff, ((site, label),))])

    @classmethod
    def from_string(cls, text, n_sites, coeff=1.0):
        return cls(n_sites, [(coeff, parse_pauli(text))])

    # algebra ------------------------------------------------------------

    def __eq__(self, other):
        return (isinstance(other, OperatorExpression) and self.n_sites == other.n_sites
                and self.terms == other.terms)

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        body = " + ".join(f"({t.coeff:g})*{t.label()}" for t in self.terms[:6])
        more = " + ..." if len(self.terms) > 6 else ""
        return f"OperatorExpression(n_sites={self.n_sites}, {body or '0'}{more})"

    def _check(self, other):
        if other.n_sites != self.n_sites:
            raise ValueError("operators act on different numbers of sites")

    def __add__(self, other):
        if isinstance(other, Number):
            other = OperatorExpression.identity(self.n_sites, other)
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        self._check(other)
        return OperatorExpression(self.n_sites, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return OperatorExpression(
                self.n_sites, [(t.coeff * other, t.factors) for t in self.terms])
        if not isinstance(other, OperatorExpression):
            return NotImplemented
        self._check(other)
        out = []
        for a in self.terms:
            for b in other.terms:
                out.append((a.coeff * b.coeff, a.factors + b.factors))
        return OperatorExpression(self.n_sites, out)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def adjoint(self):
        return OperatorExpression(
            self.n_sites, [(np.conj(t.coeff), t.factors) for t in self.terms])

    def is_hermitian(self, tol=1e-12) -> bool:
        # Pauli strings are Hermitian and linearly independent.
        return all(abs(complex(t.coeff).imag) <= tol for t in self.terms)

    def commutator(self, other):
        return self * other - other * self

    def norm_bound(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms))

    # action -------------------------------------------------------------

    def compile(self, sector: BasisSector, strict: bool = True) -> "PauliKernel":
        if sector.is_collective:
            raise ValueError("Pauli operators cannot act on a collective block")
        if sector.n_sites != self.n_sites:
            raise ValueError(
                f"operator on {self.n_sites} sites, sector on {sector.n_sites}")
        return _compiled(self, sector, strict)

    def apply(self, state: QuantumState) -> np.ndarray:
        return self.compile(state.sector).matvec(state.amplitudes)

    def to_dense(self, sector: BasisSector | None = None) -> np.ndarray:
        return self.compile(sector or BasisSector.full(self.n_sites)).to_dense()


def _sort_key(key):
    return (len(key), tuple((s, LABELS.index(lab)) for s, lab in key))


def canonicalize(terms, n_sites) -> OperatorExpression:
    """Sort, merge and prune ``terms``; see :class:`OperatorExpression`."""
    return OperatorExpression(n_sites, terms)


class PauliKernel:
    """Gather kernel of a Pauli expression on one sector."""

    def __init__(self, expr: OperatorExpression, sector: BasisSector, strict: bool):
        basis = sector.basis
        groups: dict[int, list] = {}
        for t in expr.terms:
            x, z, ny = t.masks()
            groups.setdefault(x, []).append((z, complex(t.coeff) * 1j ** ny))
        self.dim = basis.size
        self.sector = sector
        self._diag = None
        self._parts = []
        complex_parts = False
        for x in sorted(groups):
            fac = np.zeros(basis.size, dtype=np.complex128)
            for z, c in groups[x]:
                fac += c * (1 - 2 * (popcount(basis & z) & 1))
            is_real = not np.any(fac.imag)
            complex_parts |= not is_real
            fac = fac.real.copy() if is_real else fac
            if x == 0:
                self._diag = fac if self._diag is None else self._diag + fac
                continue
            rows = sector.index_of(basis ^ x)
            inside = rows >= 0
            if not inside.all():
                leak = ~inside & (np.abs(fac) > 1e-12)
                if strict and leak.any():
                    bad = int(basis[np.argmax(leak)])
                    raise SectorViolation(
                        f"term with flip mask {x:#x} maps state {bad:#x} outside "
                        f"sector {sector.describe()}")
            keep = inside & (fac != 0)
            src = np.nonzero(keep)[0]
            if src.size:
                self._parts.append((rows[keep], src, fac[keep]))
        self.is_real = not complex_parts

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        dtype = np.result_type(v.dtype, np.float64 if self.is_real else np.complex128)
        y = np.zeros(self.dim, dtype=dtype)
        if self._diag is not None:
            y += self._diag * v
        for rows, src, fac in self._parts:
            y[rows] += fac * v[src]
        return y

    def to_dense(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim),
                     dtype=np.float64 if self.is_real else np.complex128)
        if self._diag is not None:
            m[np.arange(self.dim), np.arange(self.dim)] += self._diag
        for rows, src, fac in self._parts:
            m[rows, src] += fac
        return m

    def tridiagonal(self):
        return None


@lru_cache(maxsize=128)
def _compiled(expr, sector, strict):
    return PauliKernel(expr, sector, strict)


# ---------------------------------------------------------------------------
# collective-spin block


class CollectiveOperator:
    """Operator on the maximal collective-spin block S = N/2.

    Basis index ``k = m + S`` runs over 0..N.  Stored as a sparse matrix of
    dimension N+1; immutable by convention.
    """

    def __init__(self, n_particles: int, matrix):
        self.n_particles = int(n_particles)
        m = sp.csr_matrix(matrix)
        if m.shape != (n_particles + 1, n_particles + 1):
            raise ValueError("collective operator has the wrong shape")
        m.sum_duplicates()
        m.eliminate_zeros()
        self.matrix = m

    @property
    def n_sites(self):
        return self.n_particles

    @classmethod
    def sz(cls, n):
        s = n / 2
        return cls(n, sp.diags(np.arange(n + 1) - s))

    @classmethod
    def s_plus(cls, n):
        s = n / 2
        m = np.arange(n) - s
        return cls(n, sp.diags(np.sqrt(s * (s + 1) - m * (m + 1)), -1))

    @classmethod
    def s_minus(cls, n):
        return cls.s_plus(n).adjoint()

    @classmethod
    def identity(cls, n, coeff=1.0):
        return cls(n, coeff * sp.identity(n + 1))

    def __add__(self, other):
        if isinstance(other, Number):
            other = CollectiveOperator.identity(self.n_particles, other)
        if not isinstance(other, CollectiveOperator):
            return NotImplemented
        return CollectiveOperator(self.n_particles, self.matrix + other.matrix)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Number):
            return CollectiveOperator(self.n_particles, self.matrix * other)
        if not isinstance(other, CollectiveOperator):
            return NotImplemented
        return CollectiveOperator(self.n_particles, self.matrix @ other.matrix)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def adjoint(self):
        return CollectiveOperator(self.n_particles, self.matrix.conj().T)

    def is_hermitian(self, tol=1e-12):
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or abs(diff).max() <= tol

    def norm_bound(self):
        return float(abs(self.matrix).sum(axis=1).max())

    def compile(self, sector: BasisSector, strict: bool = True) -> "MatrixKernel":
        if not sector.is_collective or sector.n_sites != self.n_particles:
            raise ValueError("collective operators need the matching collective sector")
        return _compiled_collective(self, sector, strict)

    def apply(self, state):
        return self.compile(state.sector).matvec(state.amplitudes)

    def to_dense(self, sector=None):
        return self.compile(sector or BasisSector.collective(self.n_particles, None)).to_dense()


class MatrixKernel:
    def __init__(self, op: CollectiveOperator, sector: BasisSector, strict: bool):
        idx = sector.basis
        cols = op.matrix[:, idx]
        if strict and idx.size < op.n_particles + 1:
            outside = np.setdiff1d(np.arange(op.n_particles + 1), idx)
            leak = cols[outside]
            if leak.nnz and abs(leak).max() > 1e-12:
                raise SectorViolation(
                    f"collective operator leaves sector {sector.describe()}")
        self.matrix = sp.csr_matrix(cols[idx])
        self.dim = idx.size
        self.sector = sector
        self.is_real = not np.any(np.imag(self.matrix.data))
        if self.is_real:
            self.matrix = sp.csr_matrix(self.matrix.real)

    def matvec(self, v):
        return self.matrix @ np.asarray(v)

    def to_dense(self):
        return self.matrix.toarray()

    def tridiagonal(self):
        """(diagonal, first off-diagonal) when the kernel is real tridiagonal."""
        if not self.is_real:
            return None
        coo = self.matrix.tocoo()
        if coo.nnz and np.abs(coo.row - coo.col).max() > 1:
            return None
        return self.matrix.diagonal(0), self.matrix.diagonal(1)


@lru_cache(maxsize=64)
def _compiled_collective(op, sector, strict):
    return MatrixKernel(op, sector, strict)


# ---------------------------------------------------------------------------
# Jordan-Wigner

FERMION_KINDS = ("create", "annihilate", "number")
_KIND_ALIASES = {"+": "create", "cdag": "create", "-": "annihilate", "c": "annihilate",
                 "n": "number"}


@dataclass(frozen=True)
class FermionTerm:
    """``coeff`` times a normal-ordered product of mode operators."""

    coeff: complex
    ops: tuple

    def __post_init__(self):
        ops = tuple((int(m), _KIND_ALIASES.get(k, k)) for m, k in self.ops)
        for _, k in ops:
            if k not in FERMION_KINDS:
                raise ValueError(f"unknown fermionic operator {k!r}")
        object.__setattr__(self, "ops", ops)

    def adjoint(self):
        swap = {"create": "annihilate", "annihilate": "create", "number": "number"}
        return FermionTerm(np.conj(self.coeff), tuple((m, swap[k]) for m, k in reversed(self.ops)))


def _validate_normal_order(term: FermionTerm, n_modes: int):
    seen = set()
    annihilated = False
    for mode, kind in term.ops:
        if not 0 <= mode < n_modes:
            raise ValueError(f"mode {mode} out of range for {n_modes} modes")
        if (mode, kind) in seen:
            raise ValueError(f"duplicate factor {kind} on mode {mode}")
        seen.add((mode, kind))
        if kind == "annihilate":
            annihilated = True
        elif kind == "create" and annihilated:
            raise ValueError("fermionic term is not normal ordered")


def _mode_image(mode, kind, n_modes):
    if kind == "number":
        return OperatorExpression(n_modes, [(0.5, ()), (-0.5, ((mode, "Z"),))])
    string = tuple((k, "Z") for k in range(mode))
    y_sign = -0.5j if kind == "create" else 0.5j
    return OperatorExpression(
        n_modes, [(0.5, string + ((mode, "X"),)), (y_sign, string + ((mode, "Y"),))])


def jordan_wigner(terms, n_modes: int) -> OperatorExpression:
    """Spin image of a fermionic term (or iterable of terms) over ``n_modes``.

    ``c_j^dag -> Z_0...Z_{j-1} (X_j - iY_j)/2`` and ``n_j -> (I - Z_j)/2``.
    """
    if isinstance(terms, FermionTerm):
        terms = [terms]
    total = OperatorExpression(n_modes)
    for term in terms:
        _validate_normal_order(term, n_modes)
        image = OperatorExpression.identity(n_modes, term.coeff)
        for mode, kind in term.ops:
            image = image * _mode_image(mode, kind, n_modes)
        total = total + image
    return total


def hopping(i, j, n_modes, amplitude=1.0) -> OperatorExpression:
    """JW image of ``amplitude * (c_i^dag c_j + c_j^dag c_i)``."""
    t = FermionTerm(amplitude, ((i, "create"), (j, "annihilate")))
    return jordan_wigner([t, t.adjoint()], n_modes)


def number(i, n_modes) -> OperatorExpression:
    return jordan_wigner(FermionTerm(1.0, ((i, "number"),)), n_modes)


def is_close_to_zero(x, tol=1e-12):
    return math.isclose(abs(x), 0.0, abs_tol=tol)
