import os

import numpy as np
from setuptools import Extension, setup

# SPARSEVAR_NO_EXT=1 skips the compiled kernels; the package then runs on
# the pure-Python fallback.
ext_modules = []
if not os.environ.get("SPARSEVAR_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "sparsevar._kernels._ckernels",
                ["src/sparsevar/_kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
