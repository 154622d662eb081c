"""Recursive multi-scale preconditioned conjugate gradient solvers for the
2-D heterogeneous porous-flow equation, with random-field generators and a
benchmark harness."""

from .discretize import (LiftedProblem, StencilOperator, Transmissivity, apply_operator,
                         assemble_operator, boundary_lift, build_transmissivities,
                         cell_transmissivity, harmonic_face_mean, residual, to_dense)
from .fields import (GAUSSIAN, POWER_LAW, CorrelationSpec, correlation_kernel,
                     extract_subgrid, generate_lognormal_field, interpolate_to_grid,
                     read_field, rescale_log_variance, write_field)
from .grid import (DIRICHLET, NEUMANN, BoundarySide, BoundarySpec, CellField, FaceField,
                   Grid2D, dot, rms_residual)
from .harness import (ExperimentConfig, Problem, StudyReport, base_field, build_problem,
                      export_field, import_field, make_config, make_exact_test_problem,
                      run_accuracy_study, run_base_case, run_channel_case, run_compare,
                      run_scaling_study, run_variance_study)
from .multiscale import (LINEAR, PIECEWISE_CONSTANT, HierarchyParams, Level,
                         LevelHierarchy, TransferOperator, build_hierarchy,
                         choose_coarse_grid, coarsen_transmissivity, prolongate, restrict)
from .solvers import (POLYNOMIAL, RECURSIVE, TATEBE, SolveParams, SolveReport, direct_solve,
                      level_tolerance, pcg, precond_polynomial, precond_recursive_ms,
                      precond_tatebe, solve, standard_multigrid_solve)
from .splitting import MODIFIED_JACOBI, SGS, Splitting, verify_splitting

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
