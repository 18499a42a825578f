from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the numpy fallback in qrl._fallback is used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("qrl._core", ["src/qrl/_core.pyx"], extra_compile_args=["-O3"], optional=True)],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False,
                             "cdivision": True, "initializedcheck": False},
    )

setup(ext_modules=ext_modules)
