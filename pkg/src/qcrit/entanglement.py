"""Linear entropies, negativity and parametric derivatives dM/da."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .observables import ReducedDensityMatrix, bloch_vector

MEASURES = ("L2", "L4", "negativity")


@dataclass(frozen=True)
class MeasureValue:
    kind: str
    value: float
    block: tuple


def linear_entropy(rdm: ReducedDensityMatrix) -> float:
    """d/(d-1) * (1 - Tr rho^2), clipped to [0, 1] against rounding."""
    d = rdm.dim
    val = d / (d - 1) * (1.0 - rdm.purity())
    return float(min(max(val, 0.0), 1.0))


def block_entropy_L2(state, site) -> float:
    """Single-site linear entropy 1 - |r|^2 from the Bloch vector."""
    r = bloch_vector(state, site)
    return float(1.0 - (r.x ** 2 + r.y ** 2 + r.z ** 2))


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose the second qubit of a 4x4 matrix."""
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    return t.transpose(0, 3, 2, 1).reshape(4, 4)


def negativity(rdm: ReducedDensityMatrix) -> float:
    """||rho^{T_B}||_1 - 1 for a two-qubit block (1 for a Bell pair)."""
    if rdm.dim != 4:
        raise ValueError("negativity needs a two-site block")
    ev = np.linalg.eigvalsh(partial_transpose(rdm.matrix))
    return float(max(np.abs(ev).sum() - 1.0, 0.0))


def measure_derivative_wrt_density(m, a, eps_a=1e-8, lam=None) -> np.ndarray:
    """Difference quotient dM/da from samples along a sweep.

    Uses the ratio of second-order finite differences of ``m`` and ``a``
    (central inside, one-sided at the ends), with ``lam`` as the sample
    coordinate when given (the ratio does not depend on it for a uniform
    grid).  Points where the change of ``a`` over the stencil is below
    ``eps_a`` or where ``a`` is not monotone across the stencil are NaN.
    """
    m = np.asarray(m, dtype=float)
    a = np.asarray(a, dtype=float)
    if m.shape != a.shape or m.ndim != 1:
        raise ValueError("M and a must be 1-d arrays of equal length")
    n = a.size
    out = np.full(n, np.nan)
    if n < 2:
        return out
    x = np.arange(n, dtype=float) if lam is None else np.asarray(lam, dtype=float)
    order = 2 if n >= 3 else 1
    dm = np.gradient(m, x, edge_order=order)
    da = np.gradient(a, x, edge_order=order)
    span = np.empty(n)
    steps = np.diff(a)
    for i in range(n):
        lo, hi = max(i - 1, 0), min(i + 1, n - 1)
        if order == 2 and i in (0, n - 1):
            lo, hi = (0, 2) if i == 0 else (n - 3, n - 1)
        st = steps[lo:hi]
        monotone = np.all(st > 0) or np.all(st < 0)
        span[i] = abs(a[hi] - a[lo]) if monotone else 0.0
    ok = (span >= eps_a) & np.isfinite(dm) & np.isfinite(da) & (da != 0)
    out[ok] = dm[ok] / da[ok]
    return out
