"""Build script for the optional compiled kernels.

The package is pure Python plus one Cython extension holding the
unit-modulus (phase-vector) inner-loop kernels.  If the extension cannot
be built the install still succeeds and the package falls back to the
numpy implementations in ``manifold_ris._kernels._pure``.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernels skipped ({exc}); "
                  "pure-numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "pure-numpy fallback will be used")


extensions = [
    Extension(
        "manifold_ris._kernels._speedups",
        ["src/manifold_ris/_kernels/_speedups.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(extensions, language_level=3),
    cmdclass={"build_ext": OptionalBuildExt},
)
