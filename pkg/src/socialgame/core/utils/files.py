# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import pathlib
from typing import IO, TYPE_CHECKING, Any

from filelock import FileLock

logger = logging.getLogger(__name__)

if TYPE_CHECKING:
    from socialgame.core.data.types import Path

LOCK_FILE_NAME = ".socialgame.lock"


def _expand_user_path(file_path: "Path") -> pathlib.Path:
    """Convert string inputs to ``Path`` and expand the user.

    This method supports paths starting with ``~`` on Linux.
    """
    return pathlib.Path(str(file_path)).expanduser()


def file_path_to_obj_file(file_path: "Path", mode: str) -> IO[Any]:
    """Take a file path and return a file-object opened in the given mode.

    Parent folders are created when missing.
    """
    file_path = _expand_user_path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    logger.debug(f"Opening file {file_path}")
    if "b" in mode:
        return open(file_path, mode=mode)  # noqa: SIM115
    return open(file_path, mode=mode, encoding="utf-8", newline="")  # noqa: SIM115


def output_lock(directory: "Path", timeout: float = 600) -> FileLock:
    """Lock serializing writes into an output directory across processes."""
    directory = _expand_user_path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return FileLock(str(directory / LOCK_FILE_NAME), timeout=timeout)
