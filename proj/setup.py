"""Build the _pmt extension by delegating to the CMake project."""

import os
import subprocess
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        extdir = os.path.abspath(os.path.dirname(self.get_ext_fullpath(ext.name)))
        build_temp = os.path.abspath(self.build_temp)
        os.makedirs(build_temp, exist_ok=True)
        source_dir = os.path.abspath(os.path.dirname(__file__))
        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DPMT_BUILD_CLI=OFF",
            "-DPMT_BUILD_TESTS=OFF",
        ]
        subprocess.check_call(["cmake", source_dir, *cmake_args], cwd=build_temp)
        jobs = os.environ.get("CMAKE_BUILD_PARALLEL_LEVEL", "2")
        subprocess.check_call(
            ["cmake", "--build", ".", "--target", "_pmt", "-j", jobs], cwd=build_temp
        )


setup(
    ext_modules=[CMakeExtension("pmt._pmt")],
    cmdclass={"build_ext": CMakeBuild},
)
