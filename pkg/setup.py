import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernel bit-identical to the pure-Python
# fallback (no FMA contraction); do not add -ffast-math for the same reason.
extensions = [
    Extension(
        "wptlab.circuit._kernel",
        ["src/wptlab/circuit/_kernel.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
