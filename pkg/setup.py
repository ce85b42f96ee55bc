import os
from setuptools import setup, find_packages

# The directory containing this file
HERE = os.path.dirname(os.path.abspath(__file__))

# The text of the README file
with open(os.path.join(HERE, "README.md"), "r") as f:
    README = f.read()

# This call to setup() does all the work
setup(
    name="hybriddiff",
    version="0.1.0",
    description="Simulation, certification and comparison of hybrid, sliding-mode and linear differentiators",
    long_description=README,
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
    ],
    package_dir={'': 'src'},
    packages=find_packages(where='src'),
    package_data={"hybriddiff": ["scenarios/*.yaml", "scenarios/params/*.yaml"]},
    python_requires=">=3.8",
    install_requires=["jinja2", "PyYAML", "pydantic>=2", "numpy", "scipy>=1.9"],
    extras_require={
        "test": ["pytest>=7"],
    },
    entry_points={
        "console_scripts": [
            "hybriddiff=hybriddiff.cli:cli_main",
        ]
    },
)
