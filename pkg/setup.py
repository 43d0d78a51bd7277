"""Build script: compiles the optional Cython walk kernels.

If Cython (or a C++ toolchain) is unavailable the package installs without
the extension and lerwlab._kernels falls back to the numpy implementation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "lerwlab._kernels._native",
                ["src/lerwlab/_kernels/_native.pyx"],
                language="c++",
                extra_compile_args=["-O3", "-std=c++17"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
