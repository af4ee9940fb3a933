# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from typing import Dict, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, Field

from socialgame.core.errors import InvalidArguments, WindowTooShortError

logger = logging.getLogger(__name__)


class DetectionThresholds(BaseModel, extra="forbid"):
    """Thresholds turning raw sensor windows into device states."""

    acceleration_std: float = Field(0.1, gt=0)
    "Ceiling fan is on when the standard deviation of the acceleration exceeds this value."
    ac_humidity: float = Field(60.0, gt=0)
    "A/C is on when the mean humidity (%) is below this value..."
    ac_temperature: float = Field(26.0, gt=0)
    "...and the mean temperature (°C) is below this one."
    illuminance: float = Field(200.0, gt=0)
    "A light is on when the mean illuminance (lux) near it exceeds this value."
    min_window: int = Field(10, ge=1)
    "Minimum number of samples in a window."


def detect_device_state(
    window: Mapping[str, Sequence[float]], thresholds: DetectionThresholds
) -> Dict[str, int]:
    """Derive on/off states from a window of raw sensor samples.

    Recognized channels are ``acceleration`` (ceiling fan), ``humidity`` and ``temperature``
    (A/C, both needed), ``desk_illuminance`` (desk light) and ``ceiling_illuminance`` (ceiling
    light). Only resources whose channels are present are reported. Statistics do not depend
    on sample order.

    Raises:
        WindowTooShortError: A channel has fewer samples than ``thresholds.min_window``.
    """
    samples = {name: np.asarray(values, dtype=np.float64) for name, values in window.items()}
    if not samples:
        raise InvalidArguments("window has no channel")
    for name, values in samples.items():
        if values.size < thresholds.min_window:
            raise WindowTooShortError(
                f"channel '{name}' has {values.size} samples, minimum is {thresholds.min_window}"
            )
    states = {}
    if "acceleration" in samples:
        states["ceiling_fan"] = int(np.std(samples["acceleration"]) > thresholds.acceleration_std)
    if "humidity" in samples and "temperature" in samples:
        dry = np.mean(samples["humidity"]) < thresholds.ac_humidity
        cool = np.mean(samples["temperature"]) < thresholds.ac_temperature
        states["ac"] = int(dry and cool)
    for channel, resource in (
        ("desk_illuminance", "desk_light"),
        ("ceiling_illuminance", "ceiling_light"),
    ):
        if channel in samples:
            states[resource] = int(np.mean(samples[channel]) > thresholds.illuminance)
    return states
