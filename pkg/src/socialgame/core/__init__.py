# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT
#
# ruff: noqa: F401

from importlib.metadata import version

try:
    __version__ = version("socialgame-core")
except Exception:
    __version__ = "n/a"

import socialgame.core.errors
from socialgame.core.pipeline import Pipeline, run_pipeline
from socialgame.core.utils.configuration import RunConfig
