from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [Extension("teamcount._kernels", ["src/teamcount/_kernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-Python fallback is selected at import time; the extension is optional.
    ext_modules = []

setup(ext_modules=ext_modules)
