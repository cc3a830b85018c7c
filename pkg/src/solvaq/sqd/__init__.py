"""Sampled-subspace diagonalization engine."""

from .strings import SubspaceBasis, build_subspace, enumerate_strings, full_space
from .hamiltonian import ExcitationTables, ProjectedHamiltonian, occupation_numbers
from .davidson import DavidsonResult, davidson_ground_state
from .engine import (
    ActiveSpaceProblem,
    BatchResult,
    OccupationDistribution,
    SQDConfig,
    SQDResult,
    draw_batches,
    hilbert_dimension,
    init_occupations,
    recover,
    run_sqd,
    scrf_subspace_solve,
    update_occupations,
)

__all__ = [
    "ActiveSpaceProblem",
    "BatchResult",
    "DavidsonResult",
    "ExcitationTables",
    "OccupationDistribution",
    "ProjectedHamiltonian",
    "SQDConfig",
    "SQDResult",
    "SubspaceBasis",
    "build_subspace",
    "davidson_ground_state",
    "draw_batches",
    "enumerate_strings",
    "full_space",
    "hilbert_dimension",
    "init_occupations",
    "occupation_numbers",
    "recover",
    "run_sqd",
    "scrf_subspace_solve",
    "update_occupations",
]
