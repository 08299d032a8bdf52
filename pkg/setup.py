import os

from setuptools import Extension, setup

# SQETRACK_NO_EXT=1 skips the extensions; SQETRACK_PORTABLE=1 drops -march=native.
ext_modules = []
if not os.environ.get("SQETRACK_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        arch = [] if os.environ.get("SQETRACK_PORTABLE") else ["-march=native"]
        common = dict(
            include_dirs=[np.get_include(), "src/sqetrack"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [
                Extension(
                    "sqetrack._cem",
                    ["src/sqetrack/_cem.pyx"],
                    extra_compile_args=["-O3", "-ffast-math", *arch],
                    # vectorised exp/log come from glibc's libmvec
                    libraries=["mvec", "m"],
                    **common,
                ),
                Extension(
                    "sqetrack._ckernels",
                    ["src/sqetrack/_ckernels.pyx"],
                    extra_compile_args=["-O3"],
                    **common,
                ),
            ],
            compiler_directives={"language_level": 3, "embedsignature": True},
        )

setup(ext_modules=ext_modules)
