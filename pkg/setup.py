"""Build the optional compiled stencil kernels.

Installation never fails because of the extension: without Cython or a C
compiler the package runs on the numpy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("BAROFLUX_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "baroflux.solver._kernels",
                    ["src/baroflux/solver/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
