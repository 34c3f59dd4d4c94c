"""Build script: compiles the optional accelerator extension.

The package works without the extension (a numpy fallback is selected at
import time); set GEOCERT_PURE=1 to skip compilation entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("GEOCERT_PURE") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "geocert._kernels._core",
                    ["src/geocert/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
            quiet=True,
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
