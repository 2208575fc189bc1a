import os

import numpy as np
from setuptools import Extension, setup

# Set CGL_VORTEX_NO_EXT=1 to install without the compiled core; the package
# then runs on its NumPy fallback kernels.
ext_modules = []
if not os.environ.get("CGL_VORTEX_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "cgl_vortex._kernels",
            ["src/cgl_vortex/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
