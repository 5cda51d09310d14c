"""Build the optional compiled PSOR sweep kernel.

The package works without the extension (a numpy fallback is selected at
import); the Cython core is only a speedup for the hot sweep loop.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "thinobstacle._psor_core",
                ["src/thinobstacle/_psor_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
