"""Build script for the optional compiled kernel core.

The package works without the extension (a pure-numpy twin is selected at
import time), so failure to build `nirstress.nn._core` only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "nirstress.nn._core",
                sources=["src/nirstress/nn/_core.pyx"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
