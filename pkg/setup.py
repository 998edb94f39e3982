"""Builds the optional compiled kernels; the package falls back to NumPy without them."""

import sys

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# Complex products otherwise go through the NaN-recovering libgcc helpers;
# results for finite operands are unchanged. No -ffast-math.
COMPILE_ARGS = [] if sys.platform == "win32" else ["-O3", "-fcx-limited-range"]

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [Extension("ceam._kernels", ["src/ceam/_kernels.pyx"], include_dirs=[numpy.get_include()],
                   extra_compile_args=COMPILE_ARGS)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
