"""Build script: compiles the finite-difference stepping kernel.

The compiled extension is optional; if Cython or a C compiler is missing
the package falls back to the pure-numpy kernel at import time.
Build in place for development with:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "eigencircuit.kernels._fdcore",
                ["src/eigencircuit/kernels/_fdcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
