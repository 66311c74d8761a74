import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("LINEFOLLOWER_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "linefollower._ckernels",
                ["src/linefollower/_ckernels.pyx"],
                # keep a*b+c unfused so the fallback reproduces the same doubles
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
