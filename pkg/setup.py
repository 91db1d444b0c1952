import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SCALING_LAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "scaling_lab._kernels",
            [os.path.join("src", "scaling_lab", "_kernels.pyx")],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
