import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FLEAM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "fleam._kernels",
                    ["src/fleam/_kernels.pyx"],
                    # no fast-math or FMA contraction: results must match the Python fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
