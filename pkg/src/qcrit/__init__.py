"""Ground states, densities and entanglement of small lattice models."""

from .basis import BasisSector, QuantumState
from .eigensolver import (GroundSolution, SolverOptions, dense_spectrum, detect_degeneracy,
                          ground_state)
from .errors import (ConvergenceError, DegenerateGroundState, EmptySectorError, QcritError,
                     SectorViolation)
from .models import (HamiltonianSpec, ModelParams, build_hubbard, build_lipkin, build_model,
                     build_tfim, build_xxz)
from .operators import (CollectiveOperator, FermionTerm, OperatorExpression, OperatorTerm,
                        canonicalize, jordan_wigner)

__version__ = "0.1.0"

__all__ = [
    "BasisSector", "QuantumState", "GroundSolution", "SolverOptions", "dense_spectrum",
    "detect_degeneracy", "ground_state", "ConvergenceError", "DegenerateGroundState",
    "EmptySectorError", "QcritError", "SectorViolation", "HamiltonianSpec", "ModelParams",
    "build_hubbard", "build_lipkin", "build_model", "build_tfim", "build_xxz",
    "CollectiveOperator", "FermionTerm", "OperatorExpression", "OperatorTerm",
    "canonicalize", "jordan_wigner",
]
