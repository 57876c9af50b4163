"""Optional compiled kernel; the package falls back to pure Python without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("JANG_PENROSE_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("jang_penrose._ckernel", ["src/jang_penrose/_ckernel.pyx"],
                       include_dirs=[numpy.get_include()],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )

setup(ext_modules=ext_modules)
