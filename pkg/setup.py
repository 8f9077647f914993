from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:  # build without the compiled kernel
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("martinetkit._speedups", ["src/martinetkit/_speedups.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
