"""Local immunodeficiency in cross-immunoreactivity networks.

Simulation, fixed-point enumeration, linear stability and parameter sweeps
for the antigen/antibody population model on a directed network.
"""

from .core import (CRNetwork, ImmuneMatrices, ModelError, ModelParameters, SystemState,
                   build_matrices, residual, rhs, stimulation_probabilities)
from .dynamics import IntegratorOptions, Trajectory, detect_convergence, integrate
from .fixed_points import (Condition, FixedPointSolution, NodeRole, SupportPattern,
                           classify, enumerate_fixed_points, no_altruism_feasibility,
                           solve_support, stationary_space)
from .stability import (JacobianMatrix, StabilityReport, check_branch_cycle_polynomial,
                        check_five_node_polynomial, jacobian_at, spectrum, stability_of,
                        verdict)
from .catalog import compose_mirror, evaluate_catalog, get_network
from .robustness import SweepResult, SweepSpec, sweep

__version__ = "0.1.0"
