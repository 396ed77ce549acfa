"""Builders for the four lattice models as ``h0 + sum_l lambda_l A_l``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .basis import BasisSector
from .operators import (CollectiveOperator, FermionTerm, OperatorExpression,
                        hopping, jordan_wigner)

MODELS = ("tfim", "xxz", "hubbard", "lipkin")
CONTROL_NAMES = {"tfim": "lambda", "xxz": "Delta", "hubbard": "U", "lipkin": "lambda"}


@dataclass(frozen=True)
class ControlTerm:
    name: str
    value: float
    operator: object
    per_site_operators: tuple = ()


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    """``h0`` plus named control terms, with sector information.

    ``n_sites`` is the number of bits the operators act on (2L for Hubbard,
    the particle number for Lipkin); ``size`` is the count used for
    per-site normalization (N, L or N).
    """

    model: str
    n_sites: int
    size: int
    h0: object
    controls: tuple
    sector_hint: BasisSector
    generators: tuple = ()
    partition: tuple = ()
    spin_flip: bool = False
    params: dict = field(default_factory=dict)

    @property
    def control(self) -> ControlTerm:
        return self.controls[0]

    def control_named(self, name) -> ControlTerm:
        for c in self.controls:
            if c.name == name:
                return c
        raise KeyError(f"{self.model} has no control {name!r}")

    @property
    def values(self) -> dict:
        return {c.name: c.value for c in self.controls}

    def total(self, values=None):
        values = dict(self.values, **(values or {}))
        op = self.h0
        for c in self.controls:
            if values[c.name] != 0:
                op = op + values[c.name] * c.operator
        return op

    def with_values(self, **values) -> "HamiltonianSpec":
        unknown = set(values) - set(self.values)
        if unknown:
            raise KeyError(f"unknown controls {sorted(unknown)}")
        controls = tuple(replace(c, value=float(values.get(c.name, c.value)))
                         for c in self.controls)
        return replace(self, controls=controls)

    def with_value(self, value) -> "HamiltonianSpec":
        """Set the primary control."""
        return self.with_values(**{self.control.name: value})

    def fold(self, name=None) -> "HamiltonianSpec":
        """Move a control's current coupling into ``h0`` (its value becomes 0)."""
        c = self.control_named(name) if name else self.control
        controls = tuple(replace(x, value=0.0) if x.name == c.name else x
                         for x in self.controls)
        return replace(self, h0=self.h0 + c.value * c.operator, controls=controls)

    @property
    def is_collective(self):
        return isinstance(self.h0, CollectiveOperator)

    def sector(self, text=None) -> BasisSector:
        if text is None or text == "default":
            return self.sector_hint
        return BasisSector.parse(text, self.n_sites)

    def describe(self):
        vals = ", ".join(f"{k}={v:g}" for k, v in self.values.items())
        return f"{self.model}(size={self.size}, {vals})"


def _cyclic_bonds(n):
    return [(i, (i + 1) % n) for i in range(n)]


def tfim_terms(n, lam=None):
    """Ising bonds ``-X_i X_{i+1}`` and, if ``lam`` is given, fields ``-lam Z_i``."""
    terms = [(-1.0, ((i, "X"), (j, "X"))) for i, j in _cyclic_bonds(n)]
    if lam is not None:
        terms += [(-lam, ((i, "Z"),)) for i in range(n)]
    return terms


def build_tfim(n, lam=1.0) -> HamiltonianSpec:
    """H = -sum_i (X_i X_{i+1} + lam Z_i), cyclic."""
    n = int(n)
    if n < 3:
        raise ValueError("TFIM needs N >= 3")
    h0 = OperatorExpression(n, tfim_terms(n))
    per_site = tuple(OperatorExpression.pauli("Z", i, n, -1.0) for i in range(n))
    a = OperatorExpression(n, [t for op in per_site for t in op.terms])
    parity = OperatorExpression(n, [(1.0, tuple((i, "Z") for i in range(n)))])
    return HamiltonianSpec(
        model="tfim", n_sites=n, size=n, h0=h0,
        controls=(ControlTerm("lambda", float(lam), a, per_site),),
        sector_hint=BasisSector.full(n),
        generators=(parity,),
        partition=(BasisSector.parity(n, True), BasisSector.parity(n, False)),
        params={"n": n},
    )


def xxz_terms(n, delta=None):
    """Bond terms of -(1/2) sum (XX + YY [+ delta ZZ]) on a ring of ``n``."""
    terms = []
    for i, j in _cyclic_bonds(n):
        terms += [(-0.5, ((i, "X"), (j, "X"))), (-0.5, ((i, "Y"), (j, "Y")))]
        if delta is not None:
            terms.append((-0.5 * delta, ((i, "Z"), (j, "Z"))))
    return terms


def _sz_order(n):
    """n_down values with total Sz = 0 first, then +-1, +-2, ..."""
    half = n // 2
    order = [half]
    for d in range(1, half + 1):
        order += [half - d, half + d]
    return order


def build_xxz(n, delta=1.0) -> HamiltonianSpec:
    """H = -(1/2) sum_i (X X + Y Y + delta Z Z), cyclic, control ``Delta``."""
    n = int(n)
    if n < 4 or n % 2:
        raise ValueError("XXZ needs an even N >= 4")
    h0 = OperatorExpression(n, xxz_terms(n))
    per_site = tuple(OperatorExpression(n, [(-0.5, ((i, "Z"), (j, "Z")))])
                     for i, j in _cyclic_bonds(n))
    a = OperatorExpression(n, [t for op in per_site for t in op.terms])
    sz_total = OperatorExpression(n, [(0.5, ((i, "Z"),)) for i in range(n)])
    return HamiltonianSpec(
        model="xxz", n_sites=n, size=n, h0=h0,
        controls=(ControlTerm("Delta", float(delta), a, per_site),),
        sector_hint=BasisSector.sz(n, 0),
        generators=(sz_total,),
        partition=tuple(BasisSector(n, "sz", (k,)) for k in _sz_order(n)),
        spin_flip=True,
        params={"n": n},
    )


def hubbard_boundary_phase(n_orbitals):
    """+1 (periodic) when L/2 is odd, -1 (antiperiodic) when L/2 is even."""
    return 1.0 if (n_orbitals // 2) % 2 else -1.0


def build_hubbard(n_orbitals, u=0.0, t=1.0) -> HamiltonianSpec:
    """Half-filled ring: -t sum (c^dag c + h.c.) + U sum n_up n_down.

    Modes are ``2 * site + spin``.  The wrap-around bond carries
    :func:`hubbard_boundary_phase` so that U = 0 is a closed shell.
    """
    L = int(n_orbitals)
    if L < 4 or L % 2:
        raise ValueError("Hubbard chain needs an even L >= 4")
    m = 2 * L
    phase = hubbard_boundary_phase(L)
    h0 = OperatorExpression(m)
    for i, j in _cyclic_bonds(L):
        amp = -t * (phase if j < i else 1.0)
        for s in (0, 1):
            h0 = h0 + hopping(2 * i + s, 2 * j + s, m, amp)
    per_site = tuple(
        jordan_wigner(FermionTerm(1.0, ((2 * i, "number"), (2 * i + 1, "number"))), m)
        for i in range(L))
    a = OperatorExpression(m, [t_ for op in per_site for t_ in op.terms])
    n_up = OperatorExpression(m, [(L / 2, ())] + [(-0.5, ((2 * i, "Z"),)) for i in range(L)])
    n_dn = OperatorExpression(m, [(L / 2, ())] + [(-0.5, ((2 * i + 1, "Z"),)) for i in range(L)])
    partition = [BasisSector.particles(L, L // 2, L // 2)]
    partition += [BasisSector.particles(L, u_, d_) for u_ in range(L + 1)
                  for d_ in range(L + 1) if (u_, d_) != (L // 2, L // 2)]
    return HamiltonianSpec(
        model="hubbard", n_sites=m, size=L, h0=h0,
        controls=(ControlTerm("U", float(u), a, per_site),),
        sector_hint=partition[0],
        generators=(n_up, n_dn),
        partition=tuple(partition),
        params={"l": L, "t": float(t)},
    )


def build_lipkin(n, lam=1.0) -> HamiltonianSpec:
    """H = lam S_z - (1/N)(S_x^2 - S_y^2) on the S = N/2 block."""
    n = int(n)
    if n < 2:
        raise ValueError("Lipkin model needs N >= 2")
    sp_ = CollectiveOperator.s_plus(n)
    sm_ = sp_.adjoint()
    # S_x^2 - S_y^2 = (S_+^2 + S_-^2) / 2
    h0 = (sp_ * sp_ + sm_ * sm_) * (-0.5 / n)
    a = CollectiveOperator.sz(n)
    parity = CollectiveOperator(n, sp.diags((-1.0) ** np.arange(n + 1)))
    return HamiltonianSpec(
        model="lipkin", n_sites=n, size=n, h0=h0,
        controls=(ControlTerm("lambda", float(lam), a),),
        sector_hint=BasisSector.collective(n, 0),
        generators=(parity,),
        partition=(BasisSector.collective(n, 0), BasisSector.collective(n, 1)),
        params={"n": n},
    )


@dataclass(frozen=True)
class ModelParams:
    model: str
    size: int
    value: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")

    @property
    def control_name(self):
        return CONTROL_NAMES[self.model]

    def build(self, value=None) -> HamiltonianSpec:
        return build_model(self.model, self.size, self.value if value is None else value,
                           t=self.t)


def build_model(model, size, value, t=1.0) -> HamiltonianSpec:
    if model == "tfim":
        return build_tfim(size, value)
    if model == "xxz":
        return build_xxz(size, value)
    if model == "hubbard":
        return build_hubbard(size, value, t)
    if model == "lipkin":
        return build_lipkin(size, value)
    raise ValueError(f"unknown model {model!r}")
