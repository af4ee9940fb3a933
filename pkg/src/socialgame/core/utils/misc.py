# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Any, Dict, Mapping

from semver.version import Version

from socialgame.core.errors import InvalidArguments

logger = logging.getLogger(__name__)


def deep_update(base: Mapping[str, Any], *updates: Mapping[str, Any]) -> Dict[str, Any]:
    """Merge mappings recursively. Later values win, nested mappings are merged key by key."""
    merged = dict(base)
    for update in updates:
        for key, value in update.items():
            if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
                merged[key] = deep_update(merged[key], value)
            else:
                merged[key] = value
    return merged


def check_document_version(document: str, found: str, supported: str):
    """Reject a document whose major version differs from the supported one.

    Raises:
        InvalidArguments: The version does not parse or its major version differs.
    """
    try:
        version_found = Version.parse(found)
    except (TypeError, ValueError) as e:
        raise InvalidArguments(f"{document} has an invalid format version {found!r}: {e}") from None
    version_supported = Version.parse(supported)
    if version_found.major != version_supported.major:
        raise InvalidArguments(
            f"{document} format {found} is not supported (expected {version_supported.major}.x)"
        )
    if version_found > version_supported:
        logger.warning(
            f"{document} format {found} is newer than {supported}, unknown fields are ignored."
        )
