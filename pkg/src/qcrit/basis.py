"""Symmetry-restricted bases and state vectors.

Basis states are integers: bit ``b`` holds the occupation (fermions) or the
spin-down flag (spins) of site/mode ``b``.  Fermionic modes of the Hubbard
chain are interleaved as ``2 * site + spin`` with spin up = 0, down = 1.

The collective block of the Lipkin model is not a bit basis: its "encoded
states" are ``k = m + N/2``, the number of particles in the upper level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np

from .errors import EmptySectorError

SECTOR_KINDS = ("full", "sz", "particles", "parity", "collective")

_EVEN_MASK_CACHE: dict[int, int] = {}


def _even_bits(n_bits: int) -> int:
    if n_bits not in _EVEN_MASK_CACHE:
        _EVEN_MASK_CACHE[n_bits] = sum(1 << b for b in range(0, n_bits, 2))
    return _EVEN_MASK_CACHE[n_bits]


def popcount(states) -> np.ndarray:
    return np.bitwise_count(np.asarray(states, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True)
class BasisSector:
    """An ordered basis of encoded states sharing conserved quantum numbers.

    ``n_sites`` counts bits (qubits or fermionic modes), except for the
    ``collective`` kind where it is the particle number N.  ``params``
    depends on ``kind``:

    * ``full``: ``()``
    * ``sz``: ``(n_down,)``, i.e. total Sz = n_sites/2 - n_down
    * ``particles``: ``(n_up, n_down)`` over interleaved modes
    * ``parity``: ``(p,)`` with p = 0 for even popcount (prod Z = +1)
    * ``collective``: ``(p,)`` with p in {0, 1} restricting k % 2, or ``()``
      for the whole (N+1)-dimensional block
    """

    n_sites: int
    kind: str = "full"
    params: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in SECTOR_KINDS:
            raise ValueError(f"unknown sector kind {self.kind!r}")
        if self.n_sites < 1:
            raise ValueError("sector needs at least one site")
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))

    # constructors -------------------------------------------------------

    @classmethod
    def full(cls, n_sites):
        return cls(n_sites, "full")

    @classmethod
    def sz(cls, n_sites, magnetization=0.0):
        n_down = n_sites / 2 - magnetization
        if abs(n_down - round(n_down)) > 1e-9 or not 0 <= round(n_down) <= n_sites:
            raise EmptySectorError(
                f"total Sz = {magnetization} impossible on {n_sites} sites")
        return cls(n_sites, "sz", (round(n_down),))

    @classmethod
    def particles(cls, n_orbitals, n_up, n_down):
        """Fixed (N_up, N_down) on ``n_orbitals`` spatial sites (2 modes each)."""
        if not (0 <= n_up <= n_orbitals and 0 <= n_down <= n_orbitals):
            raise EmptySectorError(
                f"cannot place ({n_up}, {n_down}) particles on {n_orbitals} sites")
        return cls(2 * n_orbitals, "particles", (n_up, n_down))

    @classmethod
    def parity(cls, n_sites, even=True):
        return cls(n_sites, "parity", (0 if even else 1,))

    @classmethod
    def collective(cls, n_particles, parity=0):
        if parity is None:
            return cls(n_particles, "collective", ())
        return cls(n_particles, "collective", (parity,))

    @classmethod
    def parse(cls, text, n_sites):
        """Parse ``full``, ``sz=0``, ``parity=even``, ``particles=3,3``,
        ``collective`` or ``collective=even``.  ``n_sites`` is the bit count
        (the particle count for collective)."""
        text = text.strip().lower()
        name, _, arg = text.partition("=")
        if name == "full":
            return cls.full(n_sites)
        if name == "sz":
            return cls.sz(n_sites, float(arg or 0))
        if name == "parity":
            return cls.parity(n_sites, even=(arg or "even") in ("even", "0", "+1", "+"))
        if name == "particles":
            up, down = (int(x) for x in arg.split(","))
            return cls.particles(n_sites // 2, up, down)
        if name == "collective":
            if arg in ("", "all", "none"):
                return cls.collective(n_sites, None)
            return cls.collective(n_sites, 0 if arg in ("even", "0") else 1)
        raise ValueError(f"cannot parse sector {text!r}")

    # basis --------------------------------------------------------------

    @property
    def is_collective(self):
        return self.kind == "collective"

    @cached_property
    def basis(self) -> np.ndarray:
        n = self.n_sites
        if self.kind == "collective":
            k = np.arange(n + 1, dtype=np.int64)
            if self.params:
                k = k[k % 2 == self.params[0]]
            return k
        if n > 30:
            raise ValueError("bit bases are limited to 30 sites")
        if self.kind == "full":
            return np.arange(1 << n, dtype=np.int64)
        allstates = np.arange(1 << n, dtype=np.int64)
        if self.kind == "sz":
            keep = popcount(allstates) == self.params[0]
        elif self.kind == "parity":
            keep = popcount(allstates) % 2 == self.params[0]
        else:
            even = _even_bits(n)
            n_up, n_down = self.params
            keep = (popcount(allstates & even) == n_up) & (
                popcount(allstates & (even << 1)) == n_down)
        basis = allstates[keep]
        if basis.size == 0:
            raise EmptySectorError(f"sector {self.describe()} is empty")
        return basis

    @property
    def dimension(self) -> int:
        n = self.n_sites
        if self.kind == "full":
            return 1 << n
        if self.kind == "sz":
            return comb(n, self.params[0])
        if self.kind == "parity":
            return 1 << (n - 1)
        if self.kind == "particles":
            return comb(n // 2, self.params[0]) * comb(n // 2, self.params[1])
        return int(self.basis.size)

    def index_of(self, states) -> np.ndarray:
        """Positions of ``states`` in the basis, -1 for states outside."""
        states = np.asarray(states, dtype=np.int64)
        if self.kind == "full":
            out = states.copy()
            out[(states < 0) | (states >= (1 << self.n_sites))] = -1
            return out
        basis = self.basis
        pos = np.searchsorted(basis, states)
        pos = np.minimum(pos, basis.size - 1)
        return np.where(basis[pos] == states, pos, -1)

    @cached_property
    def lookup(self) -> dict:
        return {int(s): i for i, s in enumerate(self.basis)}

    def describe(self) -> str:
        if self.kind == "full":
            return "full"
        if self.kind == "sz":
            return f"sz={self.n_sites / 2 - self.params[0]:g}"
        if self.kind == "parity":
            return "parity=" + ("even" if self.params[0] == 0 else "odd")
        if self.kind == "particles":
            return f"particles={self.params[0]},{self.params[1]}"
        if not self.params:
            return "collective"
        return "collective=" + ("even" if self.params[0] == 0 else "odd")


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Normalized amplitudes over the basis of ``sector``."""

    sector: BasisSector
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size != self.sector.dimension:
            raise ValueError(
                f"state has {amps.size} amplitudes, sector {self.sector.describe()} "
                f"has dimension {self.sector.dimension}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, sector, vector):
        vector = np.asarray(vector, dtype=np.complex128)
        return cls(sector, vector / np.linalg.norm(vector))

    @classmethod
    def basis_state(cls, sector, encoded):
        vec = np.zeros(sector.dimension, dtype=np.complex128)
        idx = int(sector.index_of([encoded])[0])
        if idx < 0:
            raise ValueError(f"state {encoded} not in sector {sector.describe()}")
        vec[idx] = 1.0
        return cls(sector, vec)

    @property
    def n_sites(self):
        return self.sector.n_sites

    def full_amplitudes(self) -> np.ndarray:
        """Embed into the unrestricted 2**n space."""
        if self.sector.is_collective:
            raise ValueError("collective states have no bit-basis embedding")
        out = np.zeros(1 << self.sector.n_sites, dtype=np.complex128)
        out[self.sector.basis] = self.amplitudes
        return out

    def fidelity(self, other: "QuantumState") -> float:
        if other.sector == self.sector:
            overlap = np.vdot(self.amplitudes, other.amplitudes)
        else:
            overlap = np.vdot(self.full_amplitudes(), other.full_amplitudes())
        return float(abs(overlap) ** 2)
