"""Transfer-entropy-regularized finite MDPs: models, solver, and oracles."""

from .errors import InstanceError, NumericalError, ResourceError, TermdpError
from .model import (
    FiniteMdp,
    MemoryPolicy,
    ObjectiveValue,
    ReducedBelief,
    WindowJoint,
    canonicalize_policy,
    directed_information,
    expected_cost,
    factored_objective,
    objective,
    per_step_information,
    propagate_reduced,
    propagate_window,
    transfer_entropy,
    transfer_entropy_terms,
)
from .solver import (
    ClassicalSolution,
    SolveOptions,
    SolveReport,
    SolverIterate,
    backward_pass,
    classical_blahut,
    forward_pass,
    free_energy,
    multi_start,
    plan_start_policies,
    residual_from_policy,
    solve,
    stationarity_residual,
)
from .envs import (
    MazeSpec,
    build_maze,
    build_nonconvex_toy,
    load_instance,
    sample_maze_spec,
    save_instance,
)

__all__ = [
    "TermdpError",
    "InstanceError",
    "NumericalError",
    "ResourceError",
    "FiniteMdp",
    "MemoryPolicy",
    "ReducedBelief",
    "WindowJoint",
    "ObjectiveValue",
    "propagate_reduced",
    "propagate_window",
    "transfer_entropy",
    "transfer_entropy_terms",
    "directed_information",
    "per_step_information",
    "expected_cost",
    "objective",
    "factored_objective",
    "canonicalize_policy",
    "SolveOptions",
    "SolveReport",
    "SolverIterate",
    "ClassicalSolution",
    "forward_pass",
    "backward_pass",
    "solve",
    "multi_start",
    "plan_start_policies",
    "stationarity_residual",
    "residual_from_policy",
    "classical_blahut",
    "free_energy",
    "MazeSpec",
    "build_maze",
    "build_nonconvex_toy",
    "sample_maze_spec",
    "load_instance",
    "save_instance",
]

__version__ = "0.1.0"
