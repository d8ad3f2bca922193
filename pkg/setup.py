from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernels still work
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "emrange._kernels._ckernels",
                ["src/emrange/_kernels/_ckernels.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
