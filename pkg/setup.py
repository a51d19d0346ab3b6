import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mhls._kernels",
                ["src/mhls/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # The package falls back to the numpy kernels at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
