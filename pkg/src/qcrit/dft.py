"""Hellmann-Feynman and Hohenberg-Kohn checks, parameter sweeps, and
phase-transition heuristics built on finite differences of sweep data."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import GroundSolution, SolverOptions, ground_state
from .entanglement import (MEASURES, block_entropy_L2, linear_entropy,
                           measure_derivative_wrt_density, negativity)
from .errors import DegenerateGroundState, QcritError
from .models import HamiltonianSpec, ModelParams
from .observables import expectation, reduced_density_matrix
from .oracles import lipkin_l2, lipkin_l4_offdiag, lipkin_negativity_diag


def density(spec: HamiltonianSpec, sol: GroundSolution, name=None) -> float:
    """<A_l> per site for the named (default: primary) control."""
    c = spec.control_named(name) if name else spec.control
    return expectation(c.operator, sol.state) / spec.size


# ---------------------------------------------------------------------------
# identities


@dataclass(frozen=True)
class HFCheck:
    value: float
    h: float
    derivative: float
    expectation: float
    residual: float
    threshold: float

    @property
    def passed(self):
        return self.residual < self.threshold


def _solve(spec, value, sector, opts, require_gap=True):
    s = spec.with_value(value)
    sol = ground_state(s, sector, opts)
    if require_gap and sol.degenerate:
        raise DegenerateGroundState(
            f"{s.describe()} has a degenerate ground state (gap {sol.gap:.3e})")
    return s, sol


def verify_hellmann_feynman(spec, sector=None, value=None, h=1e-4, opts=None,
                            curvature=100.0) -> HFCheck:
    """Compare the central difference of E0 with <A> at the midpoint.

    Energies are totals, not per site.  The check passes when the residual
    is below ``max(1e-6, curvature * h**2)``.
    """
    opts = opts or SolverOptions()
    value = spec.control.value if value is None else float(value)
    _, lo = _solve(spec, value - h, sector, opts)
    mid_spec, mid = _solve(spec, value, sector, opts)
    _, hi = _solve(spec, value + h, sector, opts)
    deriv = (hi.energy - lo.energy) / (2 * h)
    expect = expectation(mid_spec.control.operator, mid.state)
    return HFCheck(value, h, deriv, expect, abs(deriv - expect),
                   max(1e-6, curvature * h * h))


def verify_hk_duality(spec, sector, lam, lam2, opts=None) -> float:
    """(lam2 - lam) * (a - a2) with a, a2 the per-site densities; positive
    whenever the two ground states differ."""
    if lam == lam2:
        raise ValueError("HK check needs two distinct parameter values")
    opts = opts or SolverOptions()
    s1, g1 = _solve(spec, lam, sector, opts)
    s2, g2 = _solve(spec, lam2, sector, opts)
    return (lam2 - lam) * (density(s1, g1) - density(s2, g2))


# ---------------------------------------------------------------------------
# measures at a point


def point_measures(spec, sol, kinds=MEASURES, a=None) -> dict:
    """Entanglement measures of the ground state.

    Spin chains: L2 of site 0, L4 and negativity of sites (0, 1).  Hubbard:
    L2 of mode (0, up), L4 and negativity of the two modes of site 0.
    Lipkin: mean-field mode functionals evaluated at the exact density.
    """
    kinds = tuple(kinds)
    out = {}
    if spec.is_collective:
        a = density(spec, sol) if a is None else a
        funcs = {"L2": lipkin_l2, "L4": lipkin_l4_offdiag, "negativity": lipkin_negativity_diag}
        return {k: float(funcs[k](a)) for k in kinds}
    pair = None
    if "L4" in kinds or "negativity" in kinds:
        pair = reduced_density_matrix(sol.state, (0, 1))
    if "L2" in kinds:
        if spec.model == "hubbard":
            out["L2"] = linear_entropy(reduced_density_matrix(sol.state, (0,)))
        else:
            out["L2"] = block_entropy_L2(sol.state, 0)
    if "L4" in kinds:
        out["L4"] = linear_entropy(pair)
    if "negativity" in kinds:
        out["negativity"] = negativity(pair)
    return out


# ---------------------------------------------------------------------------
# sweeps


def n_workers(requested=None):
    env = os.environ.get("QCRIT_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    n = cap if requested is None else min(int(requested), cap)
    return max(1, n)


@dataclass(frozen=True)
class SweepOptions:
    measures: tuple = MEASURES
    sector: object = None
    # sweeps solve many points, so Lanczos takes over earlier than for single points
    solver: SolverOptions = SolverOptions(dense_cutoff=512)
    workers: int | None = None
    eps_a: float = 1e-8


@dataclass
class SweepRecord:
    lam: float
    epsilon: float
    a: float
    d1: float = math.nan
    d2: float = math.nan
    measures: dict = field(default_factory=dict)
    dM_dlambda: dict = field(default_factory=dict)
    dM_da: dict = field(default_factory=dict)
    degenerate: bool = False
    gap: float = math.nan
    energy: float = math.nan
    # False when a degenerate or failed point sits in the derivative stencil
    clean: bool = True
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


def check_grid(grid) -> tuple[np.ndarray, float]:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 5:
        raise ValueError("sweep needs at least 5 grid points")
    steps = np.diff(g)
    if np.any(steps <= 0):
        raise ValueError("grid must be strictly increasing")
    h = float(steps.mean())
    if np.max(np.abs(steps - h)) > 1e-6 * h:
        raise ValueError("grid must be uniformly spaced")
    return g, h


def make_grid(start, stop, step):
    """Inclusive uniform grid start, start+step, ..., stop."""
    if step <= 0 or not start < stop:
        raise ValueError("grid needs step > 0 and start < stop")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def second_derivative(y, h):
    y = np.asarray(y, dtype=float)
    d2 = np.empty_like(y)
    d2[1:-1] = (y[2:] - 2 * y[1:-1] + y[:-2]) / h ** 2
    d2[0] = (2 * y[0] - 5 * y[1] + 4 * y[2] - y[3]) / h ** 2
    d2[-1] = (2 * y[-1] - 5 * y[-2] + 4 * y[-3] - y[-4]) / h ** 2
    return d2


def _point(spec, value, sector, opts: SweepOptions):
    s = spec.with_value(value)
    try:
        sol = ground_state(s, sector, opts.solver)
        a = density(s, sol)
        meas = point_measures(s, sol, opts.measures, a=a)
    except (QcritError, np.linalg.LinAlgError) as exc:
        nan = math.nan
        return SweepRecord(value, nan, nan, measures={k: nan for k in opts.measures},
                           error=f"{type(exc).__name__}: {exc}")
    return SweepRecord(value, sol.energy_per_site, a, measures=meas,
                       degenerate=sol.degenerate, gap=sol.gap, energy=sol.energy)


def sweep(model, grid, options: SweepOptions | None = None) -> list[SweepRecord]:
    """Ground-state sweep of the primary control over a uniform grid.

    ``model`` is a :class:`ModelParams` or a built :class:`HamiltonianSpec`.
    Points are solved concurrently; records come back in grid order.
    """
    options = options or SweepOptions()
    grid, h = check_grid(grid)
    spec = model.build() if isinstance(model, ModelParams) else model
    sector = options.sector
    if isinstance(sector, str):
        sector = spec.sector(sector)
    workers = min(n_workers(options.workers), grid.size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda v: _point(spec, float(v), sector, options), grid))
    else:
        records = [_point(spec, float(v), sector, options) for v in grid]
    differentiate(records, h, options.measures, options.eps_a)
    return records


def differentiate(records, h, measures=MEASURES, eps_a=1e-8):
    """Fill d1, d2, dM/dlambda, dM/da and the clean flag of grid-ordered
    records with uniform spacing ``h``."""
    eps = np.array([r.epsilon for r in records])
    a = np.array([r.a for r in records])
    d1 = np.gradient(eps, h, edge_order=2)
    d2 = second_derivative(eps, h)
    bad = np.array([r.degenerate or r.failed for r in records])
    n = len(records)
    for i, r in enumerate(records):
        r.d1, r.d2 = (math.nan, math.nan) if r.failed else (float(d1[i]), float(d2[i]))
        lo, hi = (0, 4) if i == 0 else ((n - 4, n) if i == n - 1 else (i - 1, i + 2))
        r.clean = not bad[lo:hi].any()
    for kind in measures:
        m = np.array([r.measures.get(kind, math.nan) for r in records])
        dm = np.gradient(m, h, edge_order=2)
        dma = measure_derivative_wrt_density(m, a, eps_a=eps_a)
        for i, r in enumerate(records):
            if r.failed:
                r.dM_dlambda[kind] = r.dM_da[kind] = math.nan
                continue
            r.dM_dlambda[kind] = float(dm[i])
            r.dM_da[kind] = float(dma[i])


def chain_rule_residual(records, kinds=("L2", "L4")) -> list[dict]:
    """|dM/dlambda - dM/da * d2| per record; NaN where skipped.

    Records that are not clean (degenerate or failed stencil) or whose
    quotient dM/da is undefined are skipped.
    """
    out = []
    for r in records:
        row = {}
        for k in kinds:
            vals = (r.dM_dlambda.get(k, math.nan), r.dM_da.get(k, math.nan), r.d2)
            if not r.clean or not all(np.isfinite(vals)):
                row[k] = math.nan
            else:
                row[k] = abs(vals[0] - vals[1] * vals[2])
        out.append(row)
    return out


def max_chain_rule_residual(records, kinds=("L2", "L4")) -> dict:
    res = chain_rule_residual(records, kinds)
    out = {}
    for k in kinds:
        vals = [row[k] for row in res if np.isfinite(row[k])]
        out[k] = max(vals) if vals else math.nan
    return out


# ---------------------------------------------------------------------------
# phase-transition detection


@dataclass(frozen=True)
class QptOptions:
    jump_ratio: float = 5.0
    match_window: float = 0.1
    # the d1 jump at the largest size must keep this fraction of the smallest
    persist_fraction: float = 0.5


@dataclass
class QptCandidate:
    location: float
    order: str
    evidence: dict
    trend: list
    records: list


@dataclass
class QptReport:
    candidates: list
    corroborating: list
    sizes: list
    notes: list = field(default_factory=list)

    def to_dict(self):
        def cand(c):
            return {"location": c.location, "order": c.order, "evidence": c.evidence,
                    "trend": c.trend, "records": c.records}
        return {"sizes": self.sizes, "candidates": [cand(c) for c in self.candidates],
                "corroborating": self.corroborating, "notes": self.notes}


def _arrays(records):
    lam = np.array([r.lam for r in records])
    d1 = np.array([r.d1 for r in records])
    d2 = np.array([r.d2 for r in records])
    return lam, d1, d2


def _d1_jump(records, opts):
    lam, d1, _ = _arrays(records)
    jumps = np.abs(np.diff(d1))
    if not np.isfinite(jumps).any():
        return None
    j = int(np.nanargmax(jumps))
    med = float(np.nanmedian(jumps))
    ratio = jumps[j] / med if med > 0 else math.inf
    return {"location": float(0.5 * (lam[j] + lam[j + 1])), "magnitude": float(jumps[j]),
            "ratio": float(ratio), "indices": [j, j + 1], "hit": ratio > opts.jump_ratio}


def _d2_peak(records):
    lam, _, d2 = _arrays(records)
    mag = np.abs(d2)
    inner = mag[1:-1]
    if not np.isfinite(inner).any():
        return None
    j = int(np.nanargmax(inner)) + 1
    if j in (1, mag.size - 2) or not (mag[j] >= mag[j - 1] and mag[j] >= mag[j + 1]):
        return None
    return {"location": float(lam[j]), "magnitude": float(mag[j]), "indices": [j]}


def _d2_jump(records, opts):
    lam, _, d2 = _arrays(records)
    # one-sided end stencils are excluded
    jumps = np.abs(np.diff(d2[1:-1]))
    if jumps.size < 3 or not np.isfinite(jumps).any():
        return None
    j = int(np.nanargmax(jumps)) + 1
    med = float(np.nanmedian(jumps))
    ratio = jumps[j - 1] / med if med > 0 else math.inf
    return {"location": float(0.5 * (lam[j] + lam[j + 1])), "magnitude": float(jumps[j - 1]),
            "ratio": float(ratio), "indices": [j, j + 1], "hit": ratio > opts.jump_ratio}


def _sign_changes(records, kind):
    vals = [(r.lam, r.a, r.dM_da.get(kind, math.nan)) for r in records]
    out = []
    prev = None
    for lam, a, v in vals:
        # an exact zero sits on the extremum; compare its neighbours instead
        if not np.isfinite(v) or v == 0:
            continue
        if prev is not None and np.sign(v) != np.sign(prev[2]):
            out.append({"measure": kind, "lambda": 0.5 * (lam + prev[0]),
                        "a": 0.5 * (a + prev[1])})
        prev = (lam, a, v)
    return out


def _trend_ok(found, window):
    locs = [f["location"] for f in found]
    return max(locs) - min(locs) <= window


def detect_qpt(sweeps: dict, options: QptOptions | None = None) -> QptReport:
    """Scan sweeps of several sizes (``{size: records}``) for transitions.

    First order: the largest jump of d1 between neighbouring grid points
    exceeds ``jump_ratio`` times the median jump at every size and does not
    fade with size.  Second order: a local maximum of |d2|, or a jump of d2
    standing out the same way, whose magnitude grows strictly with size.
    Sign changes of dM/da are reported as corroborating evidence only.
    """
    opts = options or QptOptions()
    sizes = sorted(sweeps)
    report = QptReport(candidates=[], corroborating=[], sizes=sizes)
    for n in sizes:
        for kind in MEASURES:
            for sc in _sign_changes(sweeps[n], kind):
                report.corroborating.append(dict(sc, size=n))
    if len(sizes) < 2:
        report.notes.append("size trends need at least two system sizes; "
                            "only corroborating evidence reported")
        return report

    def trend(found):
        return [{"size": n, "location": f["location"], "magnitude": f["magnitude"]}
                for n, f in zip(sizes, found)]

    def cites(found):
        return [{"size": n, "lambda": [sweeps[n][i].lam for i in f["indices"]]}
                for n, f in zip(sizes, found)]

    first = [_d1_jump(sweeps[n], opts) for n in sizes]
    if all(f is not None and f["hit"] for f in first) and _trend_ok(first, opts.match_window):
        mags = [f["magnitude"] for f in first]
        if mags[-1] >= opts.persist_fraction * mags[0]:
            report.candidates.append(QptCandidate(
                location=first[-1]["location"], order="first",
                evidence={"kind": "d1-jump", "magnitude": mags[-1],
                          "ratio_to_median": first[-1]["ratio"]},
                trend=trend(first), records=cites(first)))

    second = []
    peaks = [_d2_peak(sweeps[n]) for n in sizes]
    if all(p is not None for p in peaks) and _trend_ok(peaks, opts.match_window):
        mags = [p["magnitude"] for p in peaks]
        if all(b > a for a, b in zip(mags, mags[1:])):
            second.append(QptCandidate(
                location=peaks[-1]["location"], order="second",
                evidence={"kind": "d2-extremum", "magnitude": mags[-1]},
                trend=trend(peaks), records=cites(peaks)))
    jumps = [_d2_jump(sweeps[n], opts) for n in sizes]
    if all(j is not None and j["hit"] for j in jumps) and _trend_ok(jumps, opts.match_window):
        mags = [j["magnitude"] for j in jumps]
        if all(b > a for a, b in zip(mags, mags[1:])):
            second.append(QptCandidate(
                location=jumps[-1]["location"], order="second",
                evidence={"kind": "d2-jump", "magnitude": mags[-1],
                          "ratio_to_median": jumps[-1]["ratio"]},
                trend=trend(jumps), records=cites(jumps)))
    firsts = [c.location for c in report.candidates]
    for c in second:
        if any(abs(c.location - f) <= opts.match_window for f in firsts):
            report.notes.append(
                f"d2 signal at {c.location:g} attributed to the first-order candidate")
            continue
        dup = next((x for x in report.candidates if x.order == "second"
                    and abs(x.location - c.location) <= opts.match_window), None)
        if dup is not None:
            dup.evidence.setdefault("also", []).append(c.evidence)
            continue
        report.candidates.append(c)
    return report
