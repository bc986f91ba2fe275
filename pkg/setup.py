"""Build script. The compiled convolution kernel is optional: if Cython or a C
compiler is unavailable the package installs anyway and falls back to the
numpy implementation (see eetlab.backend)."""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "eetlab._convkern",
                ["src/eetlab/_convkern.pyx"],
                include_dirs=[numpy.get_include()],
                # ffp-contract=off: keep multiply-add rounding identical to the
                # pure-numpy fallback so both backends are bit-for-bit equal.
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    import warnings

    warnings.warn(f"building without compiled convolution kernel: {exc}")

setup(ext_modules=ext_modules)
