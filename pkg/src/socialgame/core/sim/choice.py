# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.special import softmax

from socialgame.core.errors import EmptyChoiceSetError, InvalidArguments

logger = logging.getLogger(__name__)

_UNIFORM_GUARD = 1e-12


def gumbel_noise(rng: np.random.Generator, size: Union[int, Tuple[int, ...]], scale: float = 1.0):
    """Standard Gumbel draws by inverse CDF, ``-ln(-ln U)``, scaled by ``scale``.

    ``U`` is kept away from 0 and 1 so the draws stay finite.
    """
    u = np.clip(rng.random(size), _UNIFORM_GUARD, 1.0 - _UNIFORM_GUARD)
    return -scale * np.log(-np.log(u))


def logit_probabilities(utilities: Sequence[float], scale: float = 1.0) -> np.ndarray:
    """Multinomial-logit choice probabilities ``exp(u_k / scale) / sum_j exp(u_j / scale)``."""
    utilities = np.asarray(utilities, dtype=np.float64)
    return softmax(utilities / scale, axis=-1)


def sample_gumbel_choice(
    utilities: Sequence[float], rng: np.random.Generator, scale: float = 1.0
) -> int:
    """Pick the alternative maximizing utility plus independent Gumbel noise.

    Under Gumbel noise the choice frequencies follow :func:`logit_probabilities`.

    Raises:
        EmptyChoiceSetError: No alternative was given.
        InvalidArguments: A utility is not finite or the scale is not positive.
    """
    utilities = np.asarray(utilities, dtype=np.float64).reshape(-1)
    if utilities.size == 0:
        raise EmptyChoiceSetError("cannot choose from an empty choice set")
    if not np.all(np.isfinite(utilities)):
        raise InvalidArguments("utilities must be finite")
    if not scale > 0:
        raise InvalidArguments(f"Gumbel scale must be > 0 (got {scale})")
    return int(np.argmax(utilities + gumbel_noise(rng, utilities.size, scale)))
