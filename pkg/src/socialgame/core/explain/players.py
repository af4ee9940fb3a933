# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping

import numpy as np

from socialgame.core.data.minutes import MinuteTable
from socialgame.core.errors import EmptyTableError, InvalidArguments, TooFewPlayersError

logger = logging.getLogger(__name__)

CLASSES = ("high", "medium", "low")


@dataclass(frozen=True)
class Stratification:
    """Occupants split into energy-efficiency classes by final rank."""

    classes: Dict[str, List[str]]
    "Members of every class, best rank first."
    representatives: Dict[str, str]
    "Median-rank member of every class."

    def class_of(self, occupant_id: str) -> str:
        for name, members in self.classes.items():
            if occupant_id in members:
                return name
        raise KeyError(occupant_id)


def stratify_players(ranks: Mapping[str, int]) -> Stratification:
    """Split occupants into high, medium and low classes of near-equal size.

    Occupants are sorted by rank (1 is best) and cut into three contiguous groups. When the
    count is not a multiple of three, the extra members go to the better classes first. The
    representative of a class is its median-rank member, the better one for even sizes.

    Raises:
        TooFewPlayersError: Fewer than three occupants.
    """
    if len(ranks) < 3:
        raise TooFewPlayersError(f"stratification needs at least 3 occupants (got {len(ranks)})")
    values = list(ranks.values())
    if len(set(values)) != len(values):
        raise InvalidArguments("ranks must be distinct")
    ordered = sorted(ranks, key=lambda occupant: ranks[occupant])
    base, remainder = divmod(len(ordered), 3)
    classes: Dict[str, List[str]] = {}
    representatives: Dict[str, str] = {}
    start = 0
    for index, name in enumerate(CLASSES):
        size = base + (1 if index < remainder else 0)
        members = ordered[start : start + size]
        classes[name] = members
        representatives[name] = members[(size - 1) // 2]
        start += size
    logger.info(
        "Classes of sizes "
        + "/".join(str(len(classes[name])) for name in CLASSES)
        + f", representatives {representatives}."
    )
    return Stratification(classes=classes, representatives=representatives)


def final_ranks(table: MinuteTable) -> Dict[str, int]:
    """Rank of every occupant at its last minute.

    Without a rank column, occupants are ranked by their final points, most points first,
    ties going to the lower occupant id.
    """
    frame = table.frame
    if frame.empty:
        raise EmptyTableError("no minutes to rank occupants on")
    last = frame.groupby("occupant_id", sort=True).tail(1).set_index("occupant_id")
    if "rank" in table.present and last["rank"].notna().all():
        return {occupant: int(rank) for occupant, rank in last["rank"].items()}
    points = last["points_total"].sort_index()
    order = np.lexsort((np.arange(points.size), -points.to_numpy()))
    return {str(points.index[i]): position + 1 for position, i in enumerate(order)}
