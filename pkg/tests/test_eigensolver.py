import numpy as np
import pytest

from qcrit.basis import BasisSector
from qcrit.eigensolver import (SolverOptions, dense_spectrum, detect_degeneracy, ground_state,
                               lanczos)
from qcrit.errors import ConvergenceError, EmptySectorError
from qcrit.models import HamiltonianSpec, build_hubbard, build_lipkin, build_tfim, build_xxz
from qcrit.operators import OperatorExpression

LANCZOS = SolverOptions(dense_cutoff=0)


def custom(expr):
    return HamiltonianSpec(model="custom", n_sites=expr.n_sites, size=expr.n_sites, h0=expr,
                           controls=(), sector_hint=BasisSector.full(expr.n_sites))


def test_single_spin_ground_state():
    sol = ground_state(custom(OperatorExpression.pauli("X", 0, 1, -1.0)))
    assert sol.energy == pytest.approx(-1.0, abs=1e-14)
    assert np.allclose(sol.state.amplitudes, [2 ** -0.5, 2 ** -0.5])


def test_tfim_lanczos_matches_dense():
    spec = build_tfim(10, 1.0)
    dense = ground_state(spec, BasisSector.full(10), SolverOptions(resolve_symmetry=False))
    lz = ground_state(spec, BasisSector.full(10),
                      SolverOptions(dense_cutoff=0, resolve_symmetry=False))
    assert dense.method == "dense" and lz.method == "lanczos"
    assert abs(dense.energy - lz.energy) < 1e-9
    assert abs(dense.gap - lz.gap) < 1e-8
    assert lz.state.fidelity(dense.state) > 1 - 1e-10


def test_xxz_isotropic_lanczos():
    sol = ground_state(build_xxz(12, 1.0), BasisSector.sz(12, 0), LANCZOS)
    assert sol.method == "lanczos"
    assert abs(sol.energy_per_site + 0.5) < 1e-10


def test_dense_spectrum_examples():
    assert np.allclose(dense_spectrum(custom(OperatorExpression.pauli("Z", 0, 1))), [-1, 1])
    assert np.allclose(dense_spectrum(build_lipkin(2, 0.0), BasisSector.collective(2, None)),
                       [-0.5, 0, 0.5])
    bell = OperatorExpression.from_string("X0 X1", 2, -1.0) - OperatorExpression.from_string(
        "Z0 Z1", 2)
    assert dense_spectrum(custom(bell))[0] == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        dense_spectrum(build_tfim(13, 1.0), BasisSector.full(13))


def test_dense_spectrum_reproduces_apply():
    spec = build_xxz(6, 0.3)
    sec = BasisSector.sz(6, 0)
    evals = dense_spectrum(spec, sec)
    m = spec.total().compile(sec).to_dense()
    assert np.allclose(np.linalg.eigvalsh(m), evals)


@pytest.mark.parametrize("spec, sector, flag", [
    (build_tfim(8, 0.0), BasisSector.full(8), True),
    (build_tfim(8, 1.0), BasisSector.full(8), False),
    (build_xxz(8, 1.0), BasisSector.full(8), True),
    (build_xxz(8, 1.0), BasisSector.sz(8, 0), False),
])
def test_degeneracy_flags(spec, sector, flag):
    sol = ground_state(spec, sector)
    got, msg = detect_degeneracy(sol)
    assert got is flag and sol.degenerate is flag
    assert isinstance(msg, str) and msg


@pytest.mark.parametrize("spec, sector", [
    (build_tfim(10, 0.8), BasisSector.full(10)),
    (build_xxz(12, 0.5), BasisSector.sz(12, 0)),
    (build_hubbard(6, 3.0), None),
])
def test_lanczos_and_dense_agree(spec, sector):
    a = ground_state(spec, sector)
    b = ground_state(spec, sector, LANCZOS)
    assert abs(a.energy - b.energy) < 1e-9
    assert a.gap >= 0 and b.gap >= 0


def test_ritz_values_are_monotone():
    sol = ground_state(build_xxz(14, 0.7), BasisSector.sz(14, 0), LANCZOS)
    hist = np.array(sol.ritz_history)
    assert len(hist) > 5
    assert np.all(np.diff(hist) <= 1e-12)
    assert sol.energy <= hist.min() + 1e-12


def test_determinism():
    spec = build_xxz(14, -0.4)
    a = ground_state(spec, opts=LANCZOS)
    b = ground_state(spec, opts=LANCZOS)
    assert a.energy == b.energy
    assert a.state.fidelity(b.state) > 1 - 1e-12


@pytest.mark.parametrize("spec", [build_tfim(12, 1.3), build_xxz(14, 0.2),
                                  build_hubbard(6, 1.0)])
def test_residual_bound(spec):
    sol = ground_state(spec, opts=LANCZOS)
    scale = spec.total().norm_bound()
    kernel = spec.total().compile(sol.sector)
    v = sol.state.amplitudes
    assert np.linalg.norm(kernel.matvec(v) - sol.energy * v) < 1e-9 * scale
    assert sol.residual < 1e-9 * scale


def test_sweep_cutoff_agrees_with_default():
    spec = build_xxz(12, 0.6)
    a = ground_state(spec, opts=SolverOptions(dense_cutoff=512))
    b = ground_state(spec, opts=SolverOptions())
    assert a.method == "lanczos" and b.method == "dense"
    assert abs(a.energy - b.energy) < 1e-12


def test_empty_sector_and_mismatch():
    with pytest.raises(EmptySectorError):
        ground_state(build_xxz(6, 1.0), BasisSector.sz(6, 7))
    with pytest.raises(ValueError):
        ground_state(build_xxz(6, 1.0), BasisSector.sz(8, 0))


def test_non_convergence_reports_residual():
    spec = build_xxz(12, 0.5)
    with pytest.raises(ConvergenceError) as info:
        ground_state(spec, opts=SolverOptions(dense_cutoff=0, max_iterations=3))
    assert info.value.residual > 0 and info.value.iterations == 3


def test_lanczos_handles_deflation():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((40, 40)))
    evals = np.arange(40.0)
    m = (q * evals) @ q.T
    e0, v0, *_ = lanczos(lambda x: m @ x, 40, SolverOptions())
    e1, *_ = lanczos(lambda x: m @ x, 40, SolverOptions(), deflate=[v0])
    assert e0 == pytest.approx(0.0, abs=1e-9) and e1 == pytest.approx(1.0, abs=1e-9)


def test_xxz_full_space_state_has_zero_magnetization():
    spec = build_xxz(8, 1.5)
    sol = ground_state(spec, BasisSector.full(8))
    assert sol.degenerate
    sz = spec.generators[0]
    v = sol.state.amplitudes
    assert abs(np.vdot(v, sz.compile(sol.sector).matvec(v))) < 1e-12
