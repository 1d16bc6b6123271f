"""Distributionally robust truss compliance optimization.

Library layout:

- sampling: Gaussian / Gaussian-mixture load sampling with reproducible
  counter-based streams, CSV persistence.
- truss: ground-structure truss models, stiffness assembly, compliance.
- kernels: smoothing kernels, the smoothed CVaR functional, and the
  divergence machinery for the weight-ambiguity set.
- conic: canonical cone-program container (nonneg + second-order cones).
- ipm: the embedded interior-point solver.
- formulations: assembly of the robust bi-objective design programs.
- oracles: independent brute-force recomputation and solution validation.
- cli: command-line entry points (drotruss ...).
"""

from .conic import Cone, ConeProgram, Solution, NONNEG, SOC
from .ipm import SolverSettings, solve
from .kernels import (
    KERNEL_KINDS,
    TRIANGULAR,
    UNIFORM,
    Kernel,
    RiskSpec,
    cvar_functional,
    kde_cdf,
    kde_pdf,
    phi_divergence,
    phi_star,
    uniform_weights,
    upsilon,
)
from .sampling import (
    GaussianComponent,
    LoadSampleSet,
    MixtureSpec,
    load_samples_csv,
    sample_gaussian,
    sample_mixture,
    save_samples_csv,
)
from .oracles import (
    ValidationReport,
    empirical_cvar,
    validate_solution,
    worst_case_cvar,
    worst_case_expectation_dual,
    worst_case_expectation_primal,
)
from .truss import (
    Design,
    TrussModel,
    assemble_stiffness,
    build_grid_ground_structure,
    build_single_bar,
    build_truss,
    build_two_bar,
    compliance,
    expand_loads,
    load_design_csv,
    load_truss,
    save_design_csv,
    save_truss,
)

__version__ = "0.1.0"

__all__ = [
    "Cone", "ConeProgram", "Solution", "NONNEG", "SOC",
    "SolverSettings", "solve",
    "KERNEL_KINDS", "TRIANGULAR", "UNIFORM", "Kernel", "RiskSpec",
    "cvar_functional", "kde_cdf", "kde_pdf", "phi_divergence", "phi_star",
    "uniform_weights", "upsilon",
    "GaussianComponent", "LoadSampleSet", "MixtureSpec",
    "load_samples_csv", "sample_gaussian", "sample_mixture", "save_samples_csv",
    "ValidationReport", "empirical_cvar", "validate_solution",
    "worst_case_cvar", "worst_case_expectation_dual",
    "worst_case_expectation_primal",
    "Design", "TrussModel", "assemble_stiffness",
    "build_grid_ground_structure", "build_single_bar", "build_truss",
    "build_two_bar", "compliance", "expand_loads", "load_design_csv",
    "load_truss", "save_design_csv", "save_truss",
    "__version__",
]
