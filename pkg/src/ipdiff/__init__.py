"""Guided diffusion sampling of feasible solutions for 0-1 integer programs."""

__version__ = "0.1.0"

from .instance import (  # noqa: F401
    EvalReport,
    IPInstance,
    PartialAssignment,
    Solution,
    canonicalize,
    gap,
    is_feasible,
    objective_value,
    read_instance,
    violation_mean,
    violation_sum,
    write_instance,
)
