import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FOILGEN_PURE_PYTHON", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "foilgen._ckernels",
            ["src/foilgen/_ckernels.pyx"],
            include_dirs=[np.get_include()],
            # keep a*b+c unfused so results match the NumPy backend bit-for-bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
