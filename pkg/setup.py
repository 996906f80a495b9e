"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a pure-Python fallback is selected
at import time); set TRICKLEFLOW_NO_EXT=1 to skip compilation entirely.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TRICKLEFLOW_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        extensions = [
            Extension(
                "trickleflow._kernels._core",
                ["src/trickleflow/_kernels/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
