"""Build script for the optional compiled kernels.

The package works without a C compiler: if Cython or the compiler is
missing, the extension is skipped and the pure-Python kernels are used.
"""
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "exactsv._core",
                ["src/exactsv/_core.pyx"],
                # no contraction into FMA: the compiled kernels must round
                # exactly like the pure-Python ones
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("Cython not available; building pure-Python package", file=sys.stderr)


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            print(f"compiled kernels skipped: {exc}", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"compiled kernels skipped: {exc}", file=sys.stderr)


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
