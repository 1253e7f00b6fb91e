"""Build script for the optional compiled training kernels.

The package is fully functional without the extension: syncprobe.kernels
falls back to the numpy reference implementation when the compiled module
is absent (or when SYNCPROBE_PURE_PYTHON=1 is set).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "syncprobe.kernels._native",
                ["src/syncprobe/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
