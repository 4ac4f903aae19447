import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CRPGP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "crpgp._kernel",
                    ["src/crpgp/_kernel.pyx"],
                    # no FMA contraction: results must match the Python path bit for bit
                    extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
                    extra_link_args=["-fopenmp"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
