"""Builds the optional compiled kernel extension.

The package works without it (a numpy fallback is selected at import time);
build with `python setup.py build_ext --inplace` to enable the fast path.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SURGFLOW_NO_EXT") != "1" and os.path.exists(
    "src/surgflow/_kernels/_core.pyx"
):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "surgflow._kernels._core",
                    ["src/surgflow/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
