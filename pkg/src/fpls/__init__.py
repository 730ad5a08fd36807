"""Fractional p-Laplacian systems with concave-convex nonlinearities.

Discretizes the coupled system on a cell-centered grid and computes the two
Nehari-manifold solutions (the N+ minimizer and the N- minimizer).
"""

from .grid import GridSpec, GridFunction, build_grid, lr_norm
from .kernel import FracParams, KernelTable, assemble_kernel, seminorm_energy, seminorm_gradient, pair_norm_p
from .functional import (
    ProblemParams,
    WeightSet,
    StatePair,
    EnergyBreakdown,
    term_B,
    term_C,
    energy,
    energy_gradient,
    nehari_pairing,
    phi_prime_pairing,
)
from .fibering import (
    FiberingReport,
    FiberRoots,
    m_value,
    m_prime,
    t_max_of,
    solve_roots,
    fibering_report,
    classify,
    project,
)
from .constants import (
    ThresholdReport,
    SobolevEstimate,
    estimate_sobolev,
    threshold_C,
    threshold_D,
    membership,
)
from .solver import SolverConfig, SolveReport, c0_lower_bound, minimize_branch, weak_residual, solve

__all__ = [
    "GridSpec",
    "GridFunction",
    "build_grid",
    "lr_norm",
    "FracParams",
    "KernelTable",
    "assemble_kernel",
    "seminorm_energy",
    "seminorm_gradient",
    "pair_norm_p",
    "ProblemParams",
    "WeightSet",
    "StatePair",
    "EnergyBreakdown",
    "term_B",
    "term_C",
    "energy",
    "energy_gradient",
    "nehari_pairing",
    "phi_prime_pairing",
    "FiberingReport",
    "FiberRoots",
    "m_value",
    "m_prime",
    "t_max_of",
    "solve_roots",
    "fibering_report",
    "classify",
    "project",
    "ThresholdReport",
    "SobolevEstimate",
    "estimate_sobolev",
    "threshold_C",
    "threshold_D",
    "membership",
    "SolverConfig",
    "SolveReport",
    "c0_lower_bound",
    "minimize_branch",
    "weak_residual",
    "solve",
]

__version__ = "0.1.0"
