"""Build script for the optional compiled kernel backend.

The extension is strictly optional: if Cython or a C compiler is missing,
or the build fails for any other reason, the package installs anyway and
falls back to the NumPy backend at import time.
"""
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    extensions = [
        Extension(
            "diracbohm._kernels._corekernels",
            sources=["src/diracbohm/_kernels/_corekernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3", "-fno-math-errno", "-fopenmp"],
            extra_link_args=["-fopenmp"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    try:
        ext_modules = cythonize(
            extensions, compiler_directives={"language_level": "3"}
        )
    except Exception as exc:  # pragma: no cover - depends on toolchain
        print(f"cythonize failed, building without extension: {exc}",
              file=sys.stderr)
        ext_modules = []


class OptionalBuildExt:
    """Placeholder so a failed C compile degrades to a pure-Python install."""


if ext_modules:
    from setuptools.command.build_ext import build_ext as _build_ext

    class build_ext(_build_ext):  # noqa: N801 - distutils naming
        def run(self):
            try:
                super().run()
            except Exception as exc:
                print(f"extension build failed, continuing without it: {exc}",
                      file=sys.stderr)

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:
                print(f"skipping {ext.name}: {exc}", file=sys.stderr)

    setup(ext_modules=ext_modules, cmdclass={"build_ext": build_ext})
else:
    setup()
