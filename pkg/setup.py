"""Build script for the optional compiled kernels.

The package works without the extension; ``rmode_toa._kernels`` falls back to
the numpy implementation when ``_ckernels`` cannot be imported.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RMODE_TOA_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rmode_toa._ckernels",
                    ["src/rmode_toa/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
