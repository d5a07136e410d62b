#!/usr/bin/env python3
"""
semtag Setup Configuration
Ensemble cleaning and semantic tagging of OCR documents
"""

from setuptools import setup, find_packages
from pathlib import Path

# Read README for long description
readme_path = Path(__file__).parent / "README.md"
long_description = readme_path.read_text(encoding="utf-8") if readme_path.exists() else ""

# Core dependencies (always required)
core_requirements = [
    "aiohttp>=3.8.0",
    "aiofiles>=22.1.0",
    "loguru>=0.6.0",
    "orjson>=3.8.0",
    "pandas>=1.5.0",
    "pydantic>=2.0",
    "python-dotenv>=0.21.0",
    "tenacity>=8.2.0",
]

# Test dependencies
test_requirements = [
    "pytest>=7.2.0",
    "pytest-asyncio>=0.21.0",
    "pytest-cov>=4.0.0",
    "pytest-mock>=3.10.0",
    "hypothesis>=6.60.0",
]

# Development dependencies
development_requirements = test_requirements + [
    "black>=22.10.0",
    "isort>=5.10.1",
    "flake8>=5.0.4",
    "mypy>=0.991",
]

setup(
    # ===== BASIC PACKAGE INFORMATION =====
    name="semtag",
    version="0.1.0",
    description="Clean and semantically tag OCR documents with an ensemble of language models",
    long_description=long_description,
    long_description_content_type="text/markdown",

    # ===== PROJECT METADATA =====
    license="MIT",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Text Processing :: Linguistic",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Framework :: AsyncIO",
        "Environment :: Console",
    ],
    keywords=[
        "ocr", "text-cleaning", "semantic-tagging", "llm-ensemble",
        "content-preservation", "legal-documents", "async-processing",
    ],

    # ===== PACKAGE DISCOVERY =====
    packages=find_packages(exclude=["tests", "tests.*", "docs", "examples", "examples.*"]),
    python_requires=">=3.10",

    # ===== DEPENDENCIES =====
    install_requires=core_requirements,

    # ===== OPTIONAL DEPENDENCIES =====
    extras_require={
        "test": test_requirements,
        "dev": development_requirements,
    },

    # ===== ENTRY POINTS =====
    entry_points={
        "console_scripts": [
            "semtag=semtag.cli:main",
        ],
    },

    # ===== ADDITIONAL DATA FILES =====
    data_files=[
        ("config", [".env.template", "config/semtag.example.json"]),
        ("docs", ["README.md", "QUICKSTART.md"]),
    ],

    include_package_data=True,
    zip_safe=False,
)
