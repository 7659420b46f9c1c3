"""Variational data assimilation via linearized multi-block ADMM.

Four built-in dynamics (Lorenz-63, viscous Burgers' under finite-difference /
finite-element / spectral discretizations, and 2-D large-scale vorticity)
expose one-step maps with exact tangents and adjoints; the solver layer
offers the regularized linearized multi-block ADMM plus adjoint-gradient
descent baselines, wrapped by a twin-experiment command line.
"""

from .admm import AdmmParams, AdmmState, IterationRecord, init_state, outer_iteration, solve
from .assim import (
    AssimilationProblem,
    EnergyNorm,
    EuclideanNorm,
    ObservationSet,
    augmented_lagrangian,
    constraint_error,
    generate_observations,
    rollout,
    scan_landscape,
    shooting_objective,
    sub_objective,
    total_error,
    total_objective,
)
from .baselines import BaselineConfig, LineSearchError, gradient_descent, nonlinear_cg, shooting_gradient
from .models import (
    ModelCapability,
    burgers_fd_model,
    burgers_fem_model,
    burgers_spectral_model,
    lorenz_model,
    vorticity_model,
)
from .numerics import (
    ConvergenceError,
    Grid2D,
    RandomStream,
    SolverError,
    TridiagonalMatrix,
    cg_spd_solve,
    gaussian_draw,
    sor_poisson_solve,
    tridiagonal_solve,
)

__version__ = "0.1.0"
