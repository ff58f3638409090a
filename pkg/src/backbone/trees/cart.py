"""Greedy top-down tree induction followed by cost-complexity pruning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..data import Dataset
from ._splits import Impurity, SortedColumns, best_split, exact_weighted_impurity
from .model import Branch, DecisionTree, Leaf


@dataclass(frozen=True)
class TreeParams:
    """Depth limit, minimum leaf size, complexity weight and split criterion.

    ``complexity_weight`` multiplies the number of branch nodes and lives on
    the misclassification-count scale.
    """

    max_depth: int = 3
    min_bucket: int = 1
    complexity_weight: float = 0.0
    impurity: Impurity = Impurity.GINI

    def __post_init__(self):
        if self.max_depth < 0 or self.min_bucket < 1 or self.complexity_weight < 0:
            raise ValueError("need max_depth >= 0, min_bucket >= 1, complexity_weight >= 0")
        object.__setattr__(self, "impurity", Impurity(self.impurity))


def class_labels(d: Dataset):
    """Sorted class labels and the class index of every row."""
    if d.task.value == "binary":
        classes = (-1.0, 1.0)
    else:
        classes = tuple(float(c) for c in np.unique(d.y))
    y_idx = np.searchsorted(np.asarray(classes), d.y)
    return classes, y_idx


def majority(counts, classes) -> float:
    """Most frequent class; ties go to the lower class label."""
    return classes[int(np.argmax(counts))]


def errors(t: DecisionTree, d: Dataset) -> int:
    """Number of misclassified rows."""
    return int(np.sum(t.predict(d.X) != d.y))


def tree_objective(t: DecisionTree, d: Dataset, complexity_weight: float) -> float:
    """Misclassification count plus ``complexity_weight`` per branch node."""
    return errors(t, d) + complexity_weight * t.n_branches


def refresh_leaves(t: DecisionTree, X, y_idx, relabel: bool = True):
    """Recount training rows per leaf and (optionally) reset labels to the majority."""
    ids, leaves = t.apply(X)
    K = len(t.classes)
    for li, leaf in enumerate(leaves):
        leaf.counts = np.bincount(y_idx[ids == li], minlength=K).astype(float)
        if relabel and leaf.counts.sum() > 0:
            leaf.label = majority(leaf.counts, t.classes)
    return t


def _grow(sc: SortedColumns, rows, y_idx, classes, params: TreeParams, depth: int, features):
    K = len(classes)
    counts = np.bincount(y_idx[rows], minlength=K).astype(float)
    leaf = Leaf(majority(counts, classes), counts)
    if depth >= params.max_depth or np.count_nonzero(counts) <= 1:
        return leaf
    found = best_split(sc, rows, y_idx, K, params.min_bucket, params.impurity, features)
    if found is None:
        return leaf
    j, thr, score, lc, rc = found
    if params.impurity is Impurity.ENTROPY:
        parent = float(-(counts[counts > 0] * np.log(counts[counts > 0] / counts.sum())).sum())
        if not parent - score > 1e-9 * max(1.0, parent):
            return leaf
    elif exact_weighted_impurity(counts, params.impurity) <= (
        exact_weighted_impurity(lc, params.impurity) + exact_weighted_impurity(rc, params.impurity)
    ):
        return leaf
    go_left = sc.X[rows, j] < thr
    return Branch(
        j,
        thr,
        _grow(sc, rows[go_left], y_idx, classes, params, depth + 1, features),
        _grow(sc, rows[~go_left], y_idx, classes, params, depth + 1, features),
    )


def prune(node, complexity_weight: float, classes):
    """Bottom-up cost-complexity pruning on training errors.

    A subtree collapses to a leaf when the leaf's errors are at most the
    subtree's errors plus ``complexity_weight`` per branch node; a weight of
    0 keeps the grown tree.  Returns ``(node, errors, branches)``.
    """
    if isinstance(node, Leaf):
        return node, node.counts.sum() - node.counts.max(initial=0.0), 0
    left, el, bl = prune(node.left, complexity_weight, classes)
    right, er, br = prune(node.right, complexity_weight, classes)
    node = Branch(node.feature, node.threshold, left, right)
    sub_err, sub_br = el + er, bl + br + 1
    counts = subtree_counts(node)
    leaf_err = counts.sum() - counts.max()
    if complexity_weight > 0 and leaf_err <= sub_err + complexity_weight * sub_br:
        return Leaf(majority(counts, classes), counts), leaf_err, 0
    return node, sub_err, sub_br


def subtree_counts(node):
    if isinstance(node, Leaf):
        return node.counts
    return subtree_counts(node.left) + subtree_counts(node.right)


def fit_cart(d: Dataset, params: TreeParams, features=None, sorted_cols: Optional[SortedColumns] = None
             ) -> DecisionTree:
    """Greedy impurity-driven growth to ``max_depth`` then cost-complexity pruning.

    ``features`` optionally restricts the candidate split features.
    """
    if not d.is_classification:
        raise ValueError("trees need a classification task")
    classes, y_idx = class_labels(d)
    sc = sorted_cols if sorted_cols is not None else SortedColumns(d.X)
    root = _grow(sc, np.arange(d.n), y_idx, classes, params, 0, features)
    root, _, _ = prune(root, params.complexity_weight, classes)
    return DecisionTree(root, classes)
