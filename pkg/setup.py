#!/usr/bin/env python3
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

from setuptools import setup, find_packages
from trackmarket.__init__ import __version__

with open("README.md") as f:
    long_description = f.read()

setup(
    name = "trackmarket",
    version = __version__,
    python_requires=">=3.8.0",
    entry_points={
        "console_scripts": [
            "trackmarket = trackmarket.main:main",
        ],
    },

    packages = find_packages(exclude=["test"]),

    package_data = {
        "trackmarket": ["resources/*.xsd", "resources/*.in", "resources/*.json"],
    },

    install_requires = ["lxml",
                        "jinja2",
                        "anytree>=2.6.0",
                        "publicsuffixlist"],

    extras_require = {
        "test": ["testfixtures", "coverage"],
    },

    # Metadata
    author = "trackmarket authors",
    description = "Market concentration analysis of third-party tracking on the web and on mobile.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license = "BSD",
    keywords = "tracker measurement market concentration hhi",
    classifiers = [
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Topic :: Internet :: WWW/HTTP",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ],
)
