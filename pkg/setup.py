"""Build the optional compiled kernels.

Usage:
    python setup.py build_ext --inplace

The package is fully functional without the extension; ecsr._kernels falls
back to the numpy implementation when ecsr._speedups is not importable.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    extensions = []
else:
    extensions = cythonize(
        [
            Extension(
                "ecsr._speedups",
                sources=["src/ecsr/_speedups.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep multiply-add unfused so results match the pure walker bit for bit
                extra_compile_args=["-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )

setup(ext_modules=extensions)
