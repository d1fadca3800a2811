"""Build script for the optional compiled coordinate-update kernels.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the extension just makes the inner SNP loop faster.
"""

from setuptools import Extension, setup

extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "berrri._kernels",
                ["src/berrri/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in extensions:
        ext.optional = True  # fall back to pure python if the toolchain is missing
except ImportError:
    pass

setup(ext_modules=extensions)
