import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "atds.quantizer._kernel_cy",
                ["src/atds/quantizer/_kernel_cy.pyx"],
                include_dirs=[np.get_include()],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: the package falls back to the numpy kernel.
    ext_modules = []

setup(ext_modules=ext_modules)
