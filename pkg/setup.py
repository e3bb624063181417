from setuptools import setup, find_packages

setup(
    name="fxp",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=["main"],
    install_requires=[
        "PyNaCl>=1.5.0",
    ],
    entry_points={
        "console_scripts": [
            "fxp=main:main",
        ],
    },
    python_requires=">=3.9",
)
