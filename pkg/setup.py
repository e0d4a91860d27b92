"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the install still succeeds;
smalekit._kernels falls back to the pure numpy implementation at import.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "smalekit._kernels._core",
                ["src/smalekit/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
