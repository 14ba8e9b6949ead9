"""
Автоматическое дифференцирование
"""
from app.autograd.tensor import (
    Graph,
    Tensor,
    absolute,
    as_tensor,
    backward,
    clip,
    concat,
    current_graph,
    exp,
    fresh_graph,
    get_dtype,
    get_precision,
    is_grad_enabled,
    log,
    maximum,
    minimum,
    no_grad,
    precision,
    record,
    set_precision,
    sqrt,
    stack,
)
from app.autograd.gradcheck import finite_diff_check, sample_indices

__all__ = [
    "Graph",
    "Tensor",
    "absolute",
    "as_tensor",
    "backward",
    "clip",
    "concat",
    "current_graph",
    "exp",
    "finite_diff_check",
    "fresh_graph",
    "get_dtype",
    "get_precision",
    "is_grad_enabled",
    "log",
    "maximum",
    "minimum",
    "no_grad",
    "precision",
    "record",
    "sample_indices",
    "set_precision",
    "sqrt",
    "stack",
]
