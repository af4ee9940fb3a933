# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging

import pytest

from socialgame.core.errors import InvalidArguments
from socialgame.core.utils.misc import check_document_version, deep_update


def test_deep_update_merges_nested_mappings():
    base = {"a": 1, "nested": {"x": 1, "y": 2}, "list": [1]}
    merged = deep_update(base, {"nested": {"y": 3}}, {"list": [2], "b": 4})
    assert merged == {"a": 1, "nested": {"x": 1, "y": 3}, "list": [2], "b": 4}
    assert base["nested"] == {"x": 1, "y": 2}


def test_deep_update_replaces_scalars_by_mappings():
    assert deep_update({"a": 1}, {"a": {"b": 2}}) == {"a": {"b": 2}}


def test_check_document_version(caplog):
    check_document_version("model", "1.0.0", "1.0.0")
    with caplog.at_level(logging.WARNING):
        check_document_version("model", "1.2.0", "1.0.0")
    assert "newer" in caplog.text
    with pytest.raises(InvalidArguments, match="not supported"):
        check_document_version("model", "2.0.0", "1.0.0")
    with pytest.raises(InvalidArguments, match="invalid format version"):
        check_document_version("model", "1.0", "1.0.0")
