"""Builds the optional compiled kernel extension.

The package works without it: reidaug.kernels falls back to the NumPy
implementation when the extension is missing. -ffp-contract=off keeps the
compiled floating-point arithmetic bit-identical to NumPy's (no FMA fusion).
"""

from setuptools import Extension, setup


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "reidaug.kernels._cykernels",
        ["src/reidaug/kernels/_cykernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext.optional = True
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions())
