"""Feedback capacity of Gaussian linear channels with memory."""

from ._dirinfo import (
    ConvergenceError,
    DimensionError,
    DirinfoError,
    InfeasibleError,
    PreconditionError,
    UnboundedError,
    __version__,
    feedback_capacity,
    model_capacity,
    nofeedback_capacity,
    run_cli,
    scalar_capacity,
    simulate,
)

__all__ = [
    "ConvergenceError",
    "DimensionError",
    "DirinfoError",
    "InfeasibleError",
    "PreconditionError",
    "UnboundedError",
    "__version__",
    "feedback_capacity",
    "model_capacity",
    "nofeedback_capacity",
    "run_cli",
    "scalar_capacity",
    "simulate",
]
