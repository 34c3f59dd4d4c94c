"""geocert: curvature-decay invariants and geometric certificates for
explicitly parametrized immersed submanifolds of Euclidean space."""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
