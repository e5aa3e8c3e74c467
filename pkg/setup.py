"""Build the optional Cython kernels.

Set IFGRAPH_NO_EXT=1 to skip compilation; the package then runs on the
pure-Python kernels in ``ifgraph._pykernels``.
"""
import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("IFGRAPH_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "ifgraph._ckernels",
        ["src/ifgraph/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions())
