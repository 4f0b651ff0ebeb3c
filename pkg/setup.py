from setuptools import Extension, setup

# The compiled kernel is optional: if Cython (or a C compiler) is missing the
# package falls back to a pure numpy implementation selected at import time.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "nullgeom._jetcore",
                sources=["src/nullgeom/_jetcore.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
