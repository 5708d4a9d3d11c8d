"""Build script: compiles the optional Cython simulation kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from setuptools import Extension
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wbtrack.sim._kernel",
                ["src/wbtrack/sim/_kernel.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    import sys

    print(f"wbtrack: skipping Cython kernel build ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
