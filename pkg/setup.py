import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("AIRYLINE_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install; kernels fall back at import
        pass
    else:
        ext_modules = cythonize(
            [Extension("airyline._kernels", ["src/airyline/_kernels.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
