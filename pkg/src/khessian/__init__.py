"""Radial k-Hessian equations with infinite Dirichlet boundary data.

Constructs and certifies explicit sub/super barriers, solves the radial
Dirichlet problem by shooting, runs the monotone blow-up pipeline and the
non-existence probes, and fits boundary blow-up rates.
"""

from ._backend import USE_NUMBA, backend_name

__version__ = "0.1.0"

__all__ = ["USE_NUMBA", "backend_name", "__version__"]
