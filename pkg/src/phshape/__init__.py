"""In-domain energy shaping of 1-D port-Hamiltonian systems.

Structure-preserving discretization, Casimir-based controller synthesis
(exact for full actuation, SVD-optimal for patches), implicit midpoint
simulation and closed-loop pole analysis.
"""

from .closed_loop import (ClosedLoop, ReducedClosedLoop, assemble_dynamic, assemble_reduced,
                          closed_loop_hamiltonian, state_feedback)
from .discretize import (DiscretePlant, build_energy_and_dissipation, build_Ji,
                         discrete_hamiltonian, discretize)
from .errors import PHShapeError
from .experiment import (RunResult, run_closed_loop, string_closed_loop,
                         string_discretization)
from .integrator import (InitialCondition, MidpointStepper, SimConfig, Trajectory,
                         energy_balance_residuals, gaussian_profile, midpoint_step,
                         reconstruct_deformation, settle_time, simulate)
from .model import (BoundaryPortMap, ContinuousPlant, build_boundary_port_map, string_plant,
                    validate_boundary_matrix)
from .shaping import (Controller, PatchMap, ShapingProblem, build_patch_map, casimir_init,
                      casimir_value, choose_Bc_Qc_under, design_controller, fit_damping,
                      residual_f, solve_fully_actuated, solve_under_actuated)
from .spectrum import (PoleSet, leaf_poles, poles, spillover_assembly, stability_margin)

__version__ = "0.1.0"
