"""smalekit: computational toolkit for hyperbolic dynamics on concrete
Smale spaces (hyperbolic toral automorphisms and subshifts of finite
type): log-scales, leaf graphs, critical exponents, synthesized metrics,
levelled hyperbolic graphs, digit expansions, and spectral comparators.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
