"""Build the optional Cython kernels; the package falls back to numpy without them."""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("lipdp._ckernels", ["src/lipdp/_ckernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
