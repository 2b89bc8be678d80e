"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback ships in
mamiso._kernels_np); if Cython or a C compiler is missing the install
proceeds pure-Python with a warning.
"""

import warnings

from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def extensions():
    if cythonize is None:
        warnings.warn("Cython not available; installing without compiled kernels")
        return []
    from setuptools import Extension

    ext = Extension(
        "mamiso._kernels_cy",
        ["src/mamiso/_kernels_cy.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
