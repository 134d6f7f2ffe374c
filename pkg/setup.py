import os

from setuptools import setup
from setuptools.extension import Extension

ext_modules = []
if os.environ.get("SPLITQ_NO_EXTENSION") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "splitq._ckernel",
                ["src/splitq/_ckernel.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
