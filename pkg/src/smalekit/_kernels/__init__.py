"""Kernel backend selection.

The compiled Cython extension is preferred; the pure numpy fallback is
used when the extension is missing or when SMALEKIT_PURE=1 is set.
Both expose: ell_matrix, ell_pairs, NOT_ON_LEAF, BACKEND.
"""

import os

if os.environ.get("SMALEKIT_PURE") == "1":
    from ._pure import BACKEND, NOT_ON_LEAF, ell_matrix, ell_pairs
else:
    try:
        from ._core import BACKEND, NOT_ON_LEAF, ell_matrix, ell_pairs
    except ImportError:
        from ._pure import BACKEND, NOT_ON_LEAF, ell_matrix, ell_pairs

__all__ = ["BACKEND", "NOT_ON_LEAF", "ell_matrix", "ell_pairs"]
