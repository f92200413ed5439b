"""Exact calculus of non-signaling boxes: validation and algebra, the
non-locality cost LP, locality preserving operations and discrimination
bounds."""

from .box import (
    BoxError,
    BoxTable,
    Ensemble,
    SystemLayout,
    is_fully_nonsignaling,
    is_nonsignaling,
    measure,
    mix,
    tensor,
    trace_out,
    validate_box,
    variational_distance,
)
from .catalog import Label, alpha_q, anti_pr_box, b_rst, isotropic, pr_box
from .cost import cost_of, nonlocal_cost, verify_certificate

__version__ = "0.1.0"

__all__ = [
    "BoxError",
    "BoxTable",
    "Ensemble",
    "Label",
    "SystemLayout",
    "__version__",
    "alpha_q",
    "anti_pr_box",
    "b_rst",
    "cost_of",
    "is_fully_nonsignaling",
    "is_nonsignaling",
    "isotropic",
    "measure",
    "mix",
    "nonlocal_cost",
    "pr_box",
    "tensor",
    "trace_out",
    "validate_box",
    "variational_distance",
    "verify_certificate",
]
