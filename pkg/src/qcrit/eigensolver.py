"""Lowest eigenpair (and first gap) of a model within a basis sector.

Small sectors are diagonalized densely, real tridiagonal kernels (the
Lipkin parity blocks) with LAPACK's tridiagonal driver, and everything else
with a matrix-free Lanczos iteration with full reorthogonalization.  The
gap on the Lanczos path comes from a second run deflated against the
converged ground state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import BasisSector, QuantumState
from .errors import ConvergenceError, EmptySectorError


# Krylov runs on tiny sectors break down immediately; solve those densely
_ALWAYS_DENSE = 16


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 2000
    tolerance: float = 1e-10
    dense_cutoff: int = 4096
    seed: int = 42
    # split an unrestricted request into the model's conserved sectors
    resolve_symmetry: bool = True
    degeneracy_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class GroundSolution:
    energy: float
    energy_per_site: float
    state: QuantumState
    gap: float
    degenerate: bool
    iterations: int
    residual: float = 0.0
    method: str = "dense"
    ritz_history: tuple = ()
    sector_energies: dict = field(default_factory=dict)

    @property
    def sector(self):
        return self.state.sector


@dataclass
class _Eig:
    e0: float
    e1: float
    vec: np.ndarray
    iterations: int
    residual: float
    method: str
    history: tuple = ()


def fix_phase(vec):
    """Make the largest-magnitude amplitude real and positive."""
    vec = np.asarray(vec)
    k = int(np.argmax(np.abs(vec)))
    z = vec[k]
    if z == 0:
        return vec
    return vec * (np.conj(z) / abs(z))


def lanczos(matvec, dim, opts: SolverOptions, deflate=None, real=True):
    """Lowest eigenpair of a Hermitian operator given by ``matvec``.

    Returns ``(theta, vector, iterations, residual, ritz_history)``.  Vectors
    in ``deflate`` are projected out of the Krylov space.
    """
    rng = np.random.default_rng(opts.seed)
    dtype = np.float64 if real else np.complex128
    v = rng.standard_normal(dim)
    if not real:
        v = v + 1j * rng.standard_normal(dim)
    v = v.astype(dtype)
    defl = [] if deflate is None else [np.asarray(d, dtype=dtype) for d in deflate]

    def project(w):
        for d in defl:
            w = w - d * np.vdot(d, w)
        return w

    v = project(v)
    v /= np.linalg.norm(v)
    cap = min(opts.max_iterations, dim) + 1
    basis = np.empty((min(cap, 64), dim), dtype=dtype)
    basis[0] = v
    alphas, betas, history = [], [], []
    theta, s, resid = 0.0, np.ones(1), np.inf
    k = 0
    for k in range(1, cap):
        w = project(matvec(basis[k - 1]))
        alpha = float(np.real(np.vdot(basis[k - 1], w)))
        alphas.append(alpha)
        # two passes of classical Gram-Schmidt against the whole Krylov basis
        for _ in range(2):
            w = w - basis[:k].T @ (basis[:k].conj() @ w)
        w = project(w)
        beta = float(np.linalg.norm(w))
        if k == 1:
            evals, evecs = np.array([alpha]), np.ones((1, 1))
        else:
            evals, evecs = sla.eigh_tridiagonal(
                np.array(alphas), np.array(betas), select="i", select_range=(0, 0))
        theta, s = float(evals[0]), evecs[:, 0]
        history.append(theta)
        resid = beta * abs(s[-1])
        if resid < opts.tolerance * max(1.0, abs(theta)) or beta < 1e-14 or k >= dim:
            break
        if k >= basis.shape[0]:
            grown = np.empty((min(2 * basis.shape[0], cap), dim), dtype=dtype)
            grown[:k] = basis[:k]
            basis = grown
        basis[k] = w / beta
        betas.append(beta)
    else:
        raise ConvergenceError(
            f"Lanczos did not converge in {opts.max_iterations} iterations "
            f"(residual {resid:.3e})", residual=resid, iterations=k)
    vec = basis[:k].T @ s
    vec = vec / np.linalg.norm(vec)
    return theta, vec, k, float(resid), tuple(history)


def _solve_kernel(kernel, opts: SolverOptions, want_gap=True) -> _Eig:
    dim = kernel.dim
    if dim == 0:
        raise EmptySectorError("sector is empty")
    tri = kernel.tridiagonal()
    if tri is not None and dim > 1:
        d, e = tri
        hi = 1 if want_gap else 0
        evals, evecs = sla.eigh_tridiagonal(d, e, select="i", select_range=(0, hi))
        e1 = float(evals[1]) if want_gap else np.nan
        return _Eig(float(evals[0]), e1, evecs[:, 0], 1, 0.0, "tridiagonal")
    if dim <= max(opts.dense_cutoff, _ALWAYS_DENSE):
        m = kernel.to_dense()
        hi = min(1, dim - 1) if want_gap else 0
        evals, evecs = sla.eigh(m, subset_by_index=[0, hi])
        e1 = float(evals[1]) if hi == 1 else np.inf
        return _Eig(float(evals[0]), e1, evecs[:, 0], 1, 0.0, "dense")
    e0, v0, it, res, hist = lanczos(kernel.matvec, dim, opts, real=kernel.is_real)
    e1 = np.nan
    if want_gap:
        e1, _, it1, _, _ = lanczos(kernel.matvec, dim, opts, deflate=[v0],
                                   real=kernel.is_real)
        it += it1
    return _Eig(e0, e1, v0, it, res, "lanczos", hist)


def _kernel(spec, sector):
    return spec.total().compile(sector)


def _check_sector(spec, sector):
    if sector.n_sites != spec.n_sites or sector.is_collective != spec.is_collective:
        raise ValueError(f"sector {sector.describe()} does not fit {spec.describe()}")


def _residual(kernel, vec, energy):
    return float(np.linalg.norm(kernel.matvec(vec) - energy * vec))


def ground_state(spec, sector: BasisSector | None = None,
                 opts: SolverOptions | None = None) -> GroundSolution:
    """Ground state of ``spec.total()`` in ``sector`` (default: the model's hint).

    Requests for an unrestricted space (``full`` or the whole collective block)
    are solved sector by sector over ``spec.partition`` and merged when
    ``opts.resolve_symmetry`` is set; the returned state still lives in the
    requested sector.
    """
    opts = opts or SolverOptions()
    sector = spec.sector_hint if sector is None else sector
    _check_sector(spec, sector)
    unrestricted = sector.kind == "full" or (sector.is_collective and not sector.params)
    if unrestricted and opts.resolve_symmetry and spec.partition:
        return _ground_resolved(spec, sector, opts)
    kernel = _kernel(spec, sector)
    eig = _solve_kernel(kernel, opts)
    vec = fix_phase(eig.vec)
    res = _residual(kernel, vec, eig.e0)
    return _finish(spec, sector, vec, eig.e0, eig.e1 - eig.e0, eig.iterations, res,
                   eig.method, eig.history, {sector.describe(): eig.e0}, opts)


def _finish(spec, sector, vec, e0, gap, iterations, res, method, history, energies, opts):
    gap = max(float(gap), 0.0) if np.isfinite(gap) else float("inf")
    state = QuantumState.normalized(sector, vec)
    degenerate = gap < opts.degeneracy_tol * max(1.0, abs(e0))
    return GroundSolution(
        energy=float(e0), energy_per_site=float(e0) / spec.size, state=state, gap=gap,
        degenerate=bool(degenerate), iterations=int(iterations), residual=res,
        method=method, ritz_history=tuple(history), sector_energies=energies)


def _ground_resolved(spec, sector, opts):
    results = []
    for sub in spec.partition:
        kernel = _kernel(spec, sub)
        results.append((sub, kernel, _solve_kernel(kernel, opts)))
    energies = {sub.describe(): r.e0 for sub, _, r in results}
    e_min = min(r.e0 for _, _, r in results)
    tie = opts.degeneracy_tol * max(1.0, abs(e_min))
    best = next(i for i, (_, _, r) in enumerate(results) if r.e0 - e_min <= tie)
    sub, kernel, eig = results[best]
    others = [r.e0 for i, (_, _, r) in enumerate(results) if i != best]
    gap = min([eig.e1] + others) - eig.e0
    vec = fix_phase(eig.vec)
    res = _residual(kernel, vec, eig.e0)
    full = np.zeros(sector.dimension, dtype=np.complex128)
    full[sector.index_of(sub.basis)] = vec
    if spec.spin_flip and sub.kind == "sz" and 2 * sub.params[0] != spec.n_sites:
        # the degenerate partner lives in the flipped sector; return the
        # zero-magnetization combination
        flip = (1 << spec.n_sites) - 1
        partner = np.zeros_like(full)
        partner[sector.index_of(sub.basis ^ flip)] = vec
        full = (full + partner) / np.sqrt(2.0)
    iterations = sum(r.iterations for _, _, r in results)
    method = "+".join(sorted({r.method for _, _, r in results}))
    return _finish(spec, sector, fix_phase(full), eig.e0, gap, iterations, res, method,
                   eig.history, energies, opts)


def dense_spectrum(spec, sector: BasisSector | None = None, max_dim=4096) -> np.ndarray:
    sector = spec.sector_hint if sector is None else sector
    _check_sector(spec, sector)
    if sector.dimension > max_dim:
        raise ValueError(f"dimension {sector.dimension} exceeds dense limit {max_dim}")
    return sla.eigvalsh(_kernel(spec, sector).to_dense())


def detect_degeneracy(solution: GroundSolution, rel_tol=1e-10):
    """(flag, message): flag is set when the gap is below ``rel_tol * max(1, |E0|)``."""
    threshold = rel_tol * max(1.0, abs(solution.energy))
    if not np.isfinite(solution.gap):
        return False, "sector is one-dimensional; no gap"
    if solution.gap < threshold:
        return True, f"gap {solution.gap:.3e} below {threshold:.1e}: degenerate ground state"
    return False, f"gap {solution.gap:.6g}"
