import numpy
from setuptools import Extension, setup

# The compiled stepping kernel is optional: the package falls back to the
# numpy implementation when the extension is missing (see bloomsim.backend).
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "bloomsim._stepper",
                ["src/bloomsim/_stepper.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
