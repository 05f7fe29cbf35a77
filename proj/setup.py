"""Builds the _covct extension by delegating to the CMake project."""

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        out_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DCOVCT_BUILD_PYTHON=ON",
                "-DCOVCT_SKIP_TESTS=ON",
                f"-DPython_EXECUTABLE={sys.executable}",
                f"-DCOVCT_PY_OUTPUT_DIR={out_dir}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "covct_py", "-j"],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("_covct")],
    cmdclass={"build_ext": CMakeBuild},
)
