"""Evaluation metrics: support recovery, R^2, AUC and tree structure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConstantResponse, SingleClass
from .trees.model import DecisionTree, relevant_features


@dataclass(frozen=True)
class SupportMetrics:
    sr_acc: float
    sr_fa: float
    selected_size: int


def support_metrics(selected, truth) -> SupportMetrics:
    """Share of the truth that was selected, and share of the selection that is false.

    An empty truth gives ``sr_acc = 1``.
    """
    sel = set(int(j) for j in selected)
    tru = set(int(j) for j in truth)
    acc = len(sel & tru) / len(tru) if tru else 1.0
    fa = len(sel - tru) / max(len(sel), 1)
    return SupportMetrics(acc, fa, len(sel))


def r2(y_true, y_pred) -> float:
    """``1 - SSE / SST`` with SST about the mean of ``y_true``."""
    y = np.asarray(y_true, dtype=float)
    f = np.asarray(y_pred, dtype=float)
    if y.size < 2:
        raise ConstantResponse("R^2 needs at least two points")
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        raise ConstantResponse("response is constant")
    return 1.0 - float(((y - f) ** 2).sum()) / sst


def auc(labels, scores) -> float:
    """Probability that a positive outscores a negative, ties counting one half.

    Computed from midranks (the Mann-Whitney statistic).
    """
    y = np.asarray(labels, dtype=float)
    s = np.asarray(scores, dtype=float)
    pos = y > 0
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("AUC needs both classes")
    ranks = rankdata(s)  # average ranks handle ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def tree_structure_metrics(t: DecisionTree, truth):
    """``(fraction of used features that are relevant, depth)``; a root leaf gives 1.0."""
    used = relevant_features(t)
    tru = set(int(j) for j in truth)
    frac = len(used & tru) / len(used) if used else 1.0
    return frac, t.depth
