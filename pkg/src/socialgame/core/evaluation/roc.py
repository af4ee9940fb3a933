# Copyright (C) 2024 socialgame-core developers
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from socialgame.core.errors import LengthMismatchError, SingleClassError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RocResult:
    """ROC curve and the area under it.

    ``fpr`` and ``tpr`` go from (0, 0) to (1, 1), one point per distinct score, sorted by
    decreasing threshold.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    n_positive: int
    n_negative: int

    def trapezoid_area(self) -> float:
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))

    def to_csv(self) -> str:
        """Plot-ready ``fpr,tpr`` series."""
        lines = ["fpr,tpr"] + [f"{x!r},{y!r}" for x, y in zip(self.fpr.tolist(), self.tpr.tolist())]
        return "\n".join(lines) + "\n"


def _binary_labels(labels) -> np.ndarray:
    labels = np.asarray(labels).reshape(-1)
    positive = labels.astype(bool)
    if positive.all() or not positive.any():
        raise SingleClassError("labels must contain both classes")
    return positive


def roc_auc(scores, labels) -> RocResult:
    """ROC curve and AUC of binary ``labels`` scored by ``scores``.

    The AUC is the Mann-Whitney statistic ``(concordant + 0.5 * tied) / (n+ * n-)``, computed
    from average ranks so tied scores count half.

    Raises:
        SingleClassError: Only one class is present.
        LengthMismatchError: Inputs differ in length.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if scores.shape[0] != np.asarray(labels).reshape(-1).shape[0]:
        raise LengthMismatchError(f"{scores.shape[0]} scores for {np.size(labels)} labels")
    positive = _binary_labels(labels)
    n_pos = int(positive.sum())
    n_neg = int(positive.size - n_pos)

    ranks = rankdata(scores, method="average")
    u_statistic = float(np.sum(ranks[positive])) - n_pos * (n_pos + 1) / 2.0
    auc = u_statistic / (n_pos * n_neg)

    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_positive = positive[order]
    last_of_block = np.flatnonzero(np.diff(sorted_scores)) if scores.size > 1 else np.array([], int)
    cuts = np.concatenate([last_of_block, [scores.size - 1]])
    true_positives = np.cumsum(sorted_positive)[cuts]
    false_positives = (cuts + 1) - true_positives
    fpr = np.concatenate([[0.0], false_positives / n_neg])
    tpr = np.concatenate([[0.0], true_positives / n_pos])
    thresholds = np.concatenate([[np.inf], sorted_scores[cuts]])
    return RocResult(
        fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc, n_positive=n_pos, n_negative=n_neg
    )
