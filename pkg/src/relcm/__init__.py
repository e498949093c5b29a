"""relcm: a numerical laboratory for the relativistic centre-of-mass.

The package computes, for concrete relativistic systems, the internal
shift vector by which the spatial CM coordinate is displaced from the
centre-of-inertia, and certifies numerically that this vector is a
conserved Laplace-Runge-Lenz-type generator of the internal symmetry.
"""

from ._core import compiled_available, get_backend, set_backend

__version__ = "0.1.0"

__all__ = ["compiled_available", "get_backend", "set_backend", "__version__"]
