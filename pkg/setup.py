import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("SCHEDA_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "scheda._kernels",
                    ["src/scheda/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # -ffp-contract=off: no fused multiply-add, so the C kernels
                    # round exactly like the numpy fallback.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        # No Cython/numpy at build time: install the pure-python package;
        # the backend selector falls back automatically.
        ext_modules = []

setup(ext_modules=ext_modules)
