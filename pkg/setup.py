"""Builds the optional native scoring/bucketing kernels.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the extension just makes the per-point kernels
faster on large scans.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/annotator/kernels/_native.pyx",
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
