"""Riemannian optimization over phase vectors and orthonormal frames,
plus a reproducible simulation suite for RIS-aided massive MIMO."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .manifolds import (
    ComplexCircle,
    ComplexStiefel,
    Product,
    ManifoldPoint,
    TangentVector,
    project_tangent,
    retract,
    egrad_to_rgrad,
    inner,
    norm,
    transport,
    random_point,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "ComplexCircle",
    "ComplexStiefel",
    "Product",
    "ManifoldPoint",
    "TangentVector",
    "project_tangent",
    "retract",
    "egrad_to_rgrad",
    "inner",
    "norm",
    "transport",
    "random_point",
    "__version__",
]
