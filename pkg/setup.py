"""Build the optional compiled event loop.

If Cython or a C compiler is missing the package installs without it and
falls back to the pure-Python kernel at import time.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using pure Python", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def extensions():
    try:
        import numpy  # noqa: F401
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "zrpfluid._kernel",
        ["src/zrpfluid/_kernel.pyx"],
        # no FMA contraction: results must match the Python kernel bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
