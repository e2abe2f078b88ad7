"""Bounds on nonlocal correlations and separability of Dicke-diagonal states."""

from corrbounds.boxes import (
    Behavior222,
    ProbTable222,
    SliceSpec,
    chsh_value,
    pr_box,
    product_box,
    slice_behavior,
    to_behavior,
    to_probabilities,
)
from corrbounds.exceptions import ConvergenceError, OutsidePolytopeError

__all__ = [
    "Behavior222",
    "ProbTable222",
    "SliceSpec",
    "chsh_value",
    "pr_box",
    "product_box",
    "slice_behavior",
    "to_behavior",
    "to_probabilities",
    "ConvergenceError",
    "OutsidePolytopeError",
]

__version__ = "0.1.0"
