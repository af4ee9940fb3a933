# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import json
import logging
from typing import Any, Dict, Union

import numpy as np

from socialgame.core.data.types import Path
from socialgame.core.errors import InvalidArguments
from socialgame.core.learners.base import TrainedModel, _freeze
from socialgame.core.utils.files import _expand_user_path, file_path_to_obj_file
from socialgame.core.utils.misc import check_document_version

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0.0"
_ARRAY_KEY = "__ndarray__"


def _encode(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return {_ARRAY_KEY: value.tolist(), "dtype": value.dtype.str, "shape": list(value.shape)}
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode(value: Any) -> Any:
    if isinstance(value, dict):
        if _ARRAY_KEY in value:
            array = np.array(value[_ARRAY_KEY], dtype=np.dtype(value["dtype"]))
            return array.reshape(value["shape"])
        return {k: _decode(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def dump_model(model: TrainedModel) -> Dict[str, Any]:
    """Versioned JSON-compatible document of a model.

    Floats go through their shortest round-trip representation, so loading the document gives
    back the exact parameters.
    """
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "params": _encode(model.params),
        "metadata": _encode(model.metadata),
    }


def load_model(source: Union[Path, Dict[str, Any]]) -> TrainedModel:
    """Rebuild a model from a document or from a file written by :func:`save_model`.

    Raises:
        InvalidArguments: The document is malformed or its major format version differs.
    """
    if isinstance(source, dict):
        document = source
    else:
        with open(_expand_user_path(source), encoding="utf-8") as f:
            document = json.load(f)
    missing = [key for key in ("format_version", "kind", "params") if key not in document]
    if missing:
        raise InvalidArguments(f"model document lacks {missing}")
    check_document_version("model document", document["format_version"], FORMAT_VERSION)
    return TrainedModel(
        kind=document["kind"],
        params=_freeze(_decode(document["params"])),
        metadata=_decode(document.get("metadata", {})),
    )


def save_model(model: TrainedModel, path: Path):
    with file_path_to_obj_file(path, "w") as f:
        json.dump(dump_model(model), f, indent=1)
    logger.debug(f"Saved {model.kind} model to {path}.")
