"""Builds the optional compiled kernels.

Set ``EDGEFC_PURE_PYTHON=1`` to skip the extension; the package then runs on
its scipy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("EDGEFC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "edgefc._kernels",
        ["src/edgefc/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
