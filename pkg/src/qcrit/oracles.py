"""Closed-form reference results used to cross-check the numerics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import quad


# ---------------------------------------------------------------------------
# transverse-field Ising chain


def _tfim_even_momenta(n):
    # even fermion parity on a ring -> antiperiodic fermions
    return np.pi * (2 * np.arange(n) + 1) / n


def tfim_free_fermion(lam, n=None):
    """(energy per site, <sigma^z>) of the cyclic TFIM ground state.

    ``n=None`` gives the thermodynamic limit via the momentum integral; a
    finite ``n`` sums over the even-parity (antiperiodic) momenta, which is
    the sector of the finite-ring ground state.  Note <sigma^z> equals
    minus the derivative of the energy per site with respect to ``lam``.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if n is None:
        def om(k):
            return math.sqrt(max(1 + lam * lam - 2 * lam * math.cos(k), 0.0))

        def rz(k):
            w = om(k)
            return (lam - math.cos(k)) / w if w > 0 else 0.0

        pts = [math.acos(min(lam, 1.0))] if lam <= 1 else None
        eps = -quad(om, 0, math.pi, points=pts, limit=200, epsabs=1e-13)[0] / math.pi
        rho = quad(rz, 0, math.pi, points=pts, limit=200, epsabs=1e-13)[0] / math.pi
        return eps, rho
    k = _tfim_even_momenta(int(n))
    w = np.sqrt(1 + lam * lam - 2 * lam * np.cos(k))
    eps = -w.sum() / n
    rho = ((lam - np.cos(k)) / w).sum() / n
    return float(eps), float(rho)


def tfim_spontaneous_magnetization(lam):
    """<sigma^x> of a symmetry-broken infinite chain: (1 - lam^2)^(1/8) below 1."""
    return (1.0 - lam * lam) ** 0.125 if lam < 1 else 0.0


def tfim_l2_limit(lam):
    """Single-site linear entropy of the infinite chain's broken-symmetry state."""
    rx = tfim_spontaneous_magnetization(lam)
    rz = tfim_free_fermion(lam)[1]
    return 1.0 - rx * rx - rz * rz


# ---------------------------------------------------------------------------
# XXZ chain


@dataclass(frozen=True)
class XXZReference:
    eps_at_1: float
    d1_below_1: float
    d1_above_1: float
    l4_below_1: float
    l4_above_1: float
    eps_at_minus1: float
    eps_at_minus1_magnitude: float
    d1_at_minus1: float


def xxz_reference() -> XXZReference:
    """Known constants of the cyclic XXZ chain, -(1/2) sum (XX + YY + Delta ZZ).

    At Delta = -1 the chain is unitarily equivalent to the antiferromagnetic
    Heisenberg ring, so the energy per site is negative: -2 (ln 2 - 1/4).
    """
    mag = 2 * (math.log(2) - 0.25)
    return XXZReference(
        eps_at_1=-0.5,
        d1_below_1=0.0,
        d1_above_1=-0.5,
        l4_below_1=5 / 6,
        l4_above_1=2 / 3,
        eps_at_minus1=-mag,
        eps_at_minus1_magnitude=mag,
        d1_at_minus1=0.2954,
    )


def xxz_l4(eps, d1, delta):
    """Two-site linear entropy of a zero-magnetization ground state."""
    return 1 - 4 / 3 * ((1 + delta ** 2 / 2) * d1 ** 2 + eps ** 2 / 2 - eps * delta * d1)


def xxz_dl4_da(eps, d1, delta):
    """Partial derivative of :func:`xxz_l4` with respect to a = d1 at fixed eps."""
    return 4 / 3 * (eps * delta - 2 * (1 + delta ** 2 / 2) * d1)


# ---------------------------------------------------------------------------
# Hubbard chain


@dataclass(frozen=True)
class HubbardReference:
    a0: float
    l4_0: float
    slope_0: float


def hubbard_l4(a):
    return 2 / 3 * (1 + 4 * a - 8 * a * a)


def hubbard_dl4_da(a):
    return 2 / 3 * (4 - 16 * a)


def hubbard_reference(n_orbitals=None) -> HubbardReference:
    """Half-filled closed-shell values at U = 0 (independent of L)."""
    if n_orbitals is not None and n_orbitals % 2:
        raise ValueError("half filling needs an even number of sites")
    return HubbardReference(a0=0.25, l4_0=hubbard_l4(0.25), slope_0=hubbard_dl4_da(0.25))


# ---------------------------------------------------------------------------
# Lipkin model, Hartree-Fock


@dataclass(frozen=True)
class LipkinHF:
    lam: float
    alpha: float
    a: float
    eps: float
    L2: float
    L4_offdiag: float
    negativity_diag: float


def lipkin_l2(a):
    return 1 - 4 * a * a


def lipkin_l4_offdiag(a):
    return Fraction(2, 3) * (1 - 4 * a * a) if isinstance(a, Fraction) else 2 / 3 * (1 - 4 * a * a)


def lipkin_negativity_diag(a):
    return math.sqrt(max(1 - 4 * a * a, 0.0))


def lipkin_dl4_da(a):
    """d/da of the off-diagonal L4 closed form; exact for Fraction input."""
    return Fraction(-16, 3) * a if isinstance(a, Fraction) else -16 / 3 * a


def lipkin_dneg_da(a):
    return -4 * a / math.sqrt(1 - 4 * a * a)


def lipkin_hf(lam) -> LipkinHF:
    """Product-state (HF) solution of H = lam S_z - (1/N)(S_x^2 - S_y^2).

    Below lam = 1 the rotation angle obeys cos 2 alpha = lam and the energy
    per particle is -(1 + lam^2)/4; above it the state is fully polarized
    with energy -lam/2.  No constant offset: both match N -> infinity at lam = 0.
    """
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam < 1:
        alpha = 0.5 * math.acos(lam)
        a = -lam / 2
        eps = -(1 + lam * lam) / 4
    else:
        alpha, a, eps = 0.0, -0.5, -lam / 2
    return LipkinHF(lam=lam, alpha=alpha, a=a, eps=eps, L2=lipkin_l2(a),
                    L4_offdiag=lipkin_l4_offdiag(a), negativity_diag=lipkin_negativity_diag(a))


def lipkin_hf_d2(lam):
    """Second derivative of the HF energy per particle: -1/2 below 1, 0 above."""
    return -0.5 if lam < 1 else 0.0
