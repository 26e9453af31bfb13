import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernel is optional: if the build fails the package falls back
# to the pure-numpy implementation in vagt._gate_numpy.
setup(
    ext_modules=cythonize(
        [
            Extension(
                "vagt._gate_cython",
                ["src/vagt/_gate_cython.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
)
