# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT
#
# ruff: noqa: INP001
#
# Configuration file for the Sphinx documentation builder.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

from datetime import datetime

from socialgame.core import __version__

# -- Project information -----------------------------------------------------

project = "socialgame-core"
author = "socialgame-core developers"
release = version = __version__
copyright = f"(c) {datetime.now().year} socialgame-core developers"

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinx.ext.todo",
    "sphinxcontrib.autodoc_pydantic",
]
intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
}

templates_path = ["_templates"]

# Do not display todos in the documentation
todo_include_todos = False

# Autodoc settings
autodoc_typehints = "both"
autodoc_typehints_description_target = "documented"
autodoc_member_order = "groupwise"
autoclass_content = "both"

# Napoleon settings
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = False

exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# Don't always include full modules names to all descriptions
add_module_names = False

# Complain about all broken links
nitpicky = True

nitpick_ignore_regex = {
    ("py:class", "numpy.random._generator.Generator"),
    ("py:class", "numpy.typing.NDArray"),
    ("py:class", "pydantic_core._pydantic_core.Annotated"),
}

source_suffix = ".rst"
master_doc = "index"

# -- Options for HTML output -------------------------------------------------

html_theme = "alabaster"
html_short_title = html_title = "socialgame-core"
html_static_path = ["_static"]

suppress_warnings = ["config.cache"]

latex_elements = {"extraclassoptions": "openany,oneside"}
