"""Build script for the optional Cython flood kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fieldseg.segment._flood",
                ["src/fieldseg/segment/_flood.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
