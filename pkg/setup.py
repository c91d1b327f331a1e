import os

from setuptools import Extension, setup


def get_extensions():
    if os.environ.get("NOISEBENCH_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "noisebench._kernels",
                ["src/noisebench/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=get_extensions())
