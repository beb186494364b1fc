#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""

from setuptools import setup, find_packages

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("HISTORY.rst") as history_file:
    history = history_file.read()

requirements = [
    "Click>=8.0",
    "toolz>=0.10",
    "numpy>=1.17",
    "importlib_resources>=1.1",
]

setup_requirements = [
    "pytest-runner",
]

test_requirements = [
    "pytest>=6.0",
    "pytest-runner>=5.2",
    "path.py>=12.0",
    "flake8>=3.8",
    "tox>=3.20",
    "coverage>=5.0",
] + requirements

setup(
    version="0.1.0",
    author="nvllc developers",
    author_email="nvllc-dev@users.noreply.github.com",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Topic :: Scientific/Engineering",
        "Topic :: System :: Hardware",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Education",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
    ],
    description="Lifetime forecasting of degradable non-volatile last-level caches "
                "under frame disabling, error-correcting pointers and compression.",
    entry_points={
        "console_scripts": [
            "nvllc=nvllc.commands:main",
        ],
    },
    install_requires=requirements,
    license="BSD license",
    long_description=readme + "\n\n" + history,
    include_package_data=True,
    package_data={
        "nvllc": ["defaults.ini"],
    },
    keywords="nvllc cache non-volatile endurance compression bdi secded ecp lifetime simulation",
    name="nvllc",
    packages=find_packages(include=["nvllc"]),
    python_requires=">=3.7",
    setup_requires=setup_requirements,
    test_suite="tests",
    tests_require=test_requirements,
    zip_safe=False,
)
