# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
import os
import platform
from inspect import cleandoc
from pathlib import Path
from typing import Any, Dict, Optional

import tomli

from socialgame.core.data.types import Path as PathType
from socialgame.core.errors import ConfigurationNotFoundError, InvalidConfigurationError
from socialgame.core.utils.misc import deep_update

logger = logging.getLogger(__name__)


def _scan_defaults_config_paths() -> Optional[Path]:
    """Look for a configuration file in the default locations.

    Returns:
        Path of the first existing configuration file, ``None`` if there is none.
    """
    candidates = [Path("socialgame.toml")]
    if platform.system() == "Windows":
        candidates.append(Path(os.environ.get("APPDATA", "~")) / "socialgame" / "config.toml")
    else:
        xdg_config = Path(os.getenv("XDG_CONFIG_HOME") or "~/.config")
        candidates += [xdg_config / "socialgame.toml", xdg_config / "socialgame/config.toml"]
    for path in candidates:
        path = path.expanduser()  # noqa: PLW2901
        if path.is_file():
            logger.debug(f"Found a configuration file at {path}.")
            return path
    return None


def get_config(
    path: Optional[PathType] = None,
    profile: str = "default",
    ignore_missing: bool = False,
    **kwargs,
) -> Dict[str, Any]:
    """Load one profile of a TOML configuration file.

    Args:
        path: Path of the configuration file. When ``None``, ``./socialgame.toml`` and the user
            configuration folder are searched.
        profile: Section of the file to load.
        ignore_missing: Return the overrides alone instead of raising when no file is found.
        **kwargs: Overrides, merged recursively into the profile.

    Raises:
        ConfigurationNotFoundError: The file does not exist.
        InvalidConfigurationError: The file is not valid TOML or lacks the profile.
    """
    config_path = path or _scan_defaults_config_paths()
    if config_path is None:
        if ignore_missing:
            return dict(kwargs)
        raise ConfigurationNotFoundError("no configuration file found")
    config_path = Path(config_path).expanduser()
    if not config_path.is_file():
        raise ConfigurationNotFoundError(f"configuration file {config_path} does not exist")
    with open(config_path, "rb") as f:
        try:
            all_config = tomli.load(f)
        except tomli.TOMLDecodeError as e:
            raise InvalidConfigurationError(f"Invalid configuration: {e}") from None
    config = all_config.get(profile, None)
    if config is None:
        raise InvalidConfigurationError(
            cleandoc(
                f"""
                Did not find the [{profile}] profile section in {config_path}.
                Add a '[{profile}]' section or pass the name of an existing profile.
                """
            )
        )
    config = deep_update(config, kwargs)
    config["_config_file_profile"] = profile
    return config
