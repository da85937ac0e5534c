"""Simplicial complexes, exact homology, Rips complexes on the torus and
homology-preserving vertex reduction."""

from .complex import SimplicialComplex, dumps_complex, loads_complex, read_complex, write_complex
from .errors import NotFoundError, PreconditionError, ResourceError, SimplicialError, ValidationError
from .geometry import (PointConfiguration, RipsParams, TorusSpec, binomial_process, poisson_process,
                       rips_complex)
from .homology import BettiVector, betti_numbers, boundary_matrix, rank
from .reduction import ReduceOptions, ReductionReport, reduce, verify_dominating, verify_nash

__all__ = [
    "BettiVector", "NotFoundError", "PointConfiguration", "PreconditionError", "ReduceOptions",
    "ReductionReport", "ResourceError", "RipsParams", "SimplicialComplex", "SimplicialError",
    "TorusSpec", "ValidationError", "betti_numbers", "binomial_process", "boundary_matrix",
    "dumps_complex", "loads_complex", "poisson_process", "rank", "read_complex", "reduce",
    "rips_complex", "verify_dominating", "verify_nash", "write_complex",
]
