"""Build script for the optional compiled stepping kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed Cython build only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("pdflow._kernels", ["src/pdflow/_kernels.pyx"])],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
