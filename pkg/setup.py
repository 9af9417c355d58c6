from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the engine falls back to _pykernel
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "snoopsim._ckernel",
                ["src/snoopsim/_ckernel.pyx"],
                language="c++",
                extra_compile_args=["-O3", "-std=c++17"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
