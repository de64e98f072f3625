#!/usr/bin/env python3
"""
Setup script for the Remote Point Problem toolkit
"""

from setuptools import setup


# Read version from version file
def get_version():
    try:
        with open('VERSION', 'r') as f:
            return f.read().strip()
    except FileNotFoundError:
        return '0.1.0'


# Read requirements
def get_requirements():
    try:
        with open('requirements.txt', 'r') as f:
            return [line.strip() for line in f if line.strip() and not line.startswith('#')]
    except FileNotFoundError:
        return [
            'pydantic>=2.0.0',
            'numpy>=1.24.0',
            'scipy>=1.10.0',
            'jinja2>=3.1.0',
        ]


# Read long description
def get_long_description():
    try:
        with open('README.md', 'r', encoding='utf-8') as f:
            return f.read()
    except FileNotFoundError:
        return "Deterministic remote point solvers over finite groups, with small-bias spaces and exact oracles."


setup(
    name="remote-point",
    version=get_version(),
    description="Remote Point Problem solvers, small-bias spaces and Cayley graph tools over finite groups",
    long_description=get_long_description(),
    long_description_content_type="text/markdown",
    py_modules=[
        "group_schema",
        "group_core",
        "perm_engine",
        "smallbias",
        "cayley_spectral",
        "rpp_solver",
        "base_check",
        "acceptance_suite",
        "rpp_manager",
    ],
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=get_requirements(),
    extras_require={
        'dev': [
            'pytest>=7.0.0',
            'hypothesis>=6.80.0',
        ],
    },
    entry_points={
        'console_scripts': [
            'rpp=rpp_manager:main',
            'remote-point=rpp_manager:main',
        ],
    },
    data_files=[('', ['VERSION'])],
    zip_safe=False,
    keywords="remote point problem small-bias space schreier-sims cayley graph derandomization",
)
