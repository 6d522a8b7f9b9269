"""Build script for the optional compiled core.

The package is pure Python plus one Cython extension holding the hot loops
(SMO coordinate updates, separable blur, bilinear warp).  If the extension
cannot be compiled the install still succeeds and the numpy fallback in
``ssl_kernel._accel._pure`` is used instead.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Let the install proceed when no C toolchain is available."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure
            print(f"warning: compiled core skipped ({exc}); using pure-python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} skipped ({exc}); using pure-python backend")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "ssl_kernel._accel._core",
        ["src/ssl_kernel/_accel/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
