"""Build script for the optional compiled marching kernel.

The package works without it: ``diracdelay.kernels`` falls back to the
numpy implementation when the extension cannot be imported.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("DIRACDELAY_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "diracdelay._march",
                    ["src/diracdelay/_march.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
