"""Axis-aligned classification tree: structure, prediction and text format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..errors import FeatureIndexOutOfRange


@dataclass
class Leaf:
    label: float
    counts: np.ndarray  # per-class training counts, aligned with DecisionTree.classes


@dataclass
class Branch:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"


Node = Union[Leaf, Branch]


@dataclass
class DecisionTree:
    """A binary tree; points with ``x[feature] < threshold`` go left."""

    root: Node
    classes: Tuple[float, ...] = (-1.0, 1.0)

    @property
    def depth(self) -> int:
        return _depth(self.root)

    @property
    def n_branches(self) -> int:
        return sum(1 for _ in self.branches())

    def branches(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Branch):
                yield node
                stack.extend((node.right, node.left))

    def leaves(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, Branch):
                stack.extend((node.right, node.left))
            else:
                yield node

    def max_feature(self) -> int:
        return max((b.feature for b in self.branches()), default=-1)

    def apply(self, X: np.ndarray):
        """Index of the leaf reached by every row, plus the leaves in that indexing."""
        X = np.asarray(X, dtype=float)
        leaves = []
        out = np.empty(X.shape[0], dtype=np.intp)
        _route(self.root, X, np.arange(X.shape[0]), out, leaves)
        return out, leaves

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict(self, X)

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return predict_scores(self, X)


def _depth(node) -> int:
    if isinstance(node, Branch):
        return 1 + max(_depth(node.left), _depth(node.right))
    return 0


def _route(node, X, idx, out, leaves):
    if isinstance(node, Leaf):
        out[idx] = len(leaves)
        leaves.append(node)
        return
    go_left = X[idx, node.feature] < node.threshold
    _route(node.left, X, idx[go_left], out, leaves)
    _route(node.right, X, idx[~go_left], out, leaves)


def _check_columns(t: DecisionTree, X: np.ndarray):
    if X.ndim != 2:
        raise ValueError("X must be two-dimensional")
    if t.max_feature() >= X.shape[1]:
        raise FeatureIndexOutOfRange(
            f"tree splits on feature {t.max_feature()} but X has {X.shape[1]} columns"
        )


def predict(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Label of the leaf each row falls into."""
    X = np.asarray(X, dtype=float)
    _check_columns(t, X)
    ids, leaves = t.apply(X)
    labels = np.array([leaf.label for leaf in leaves], dtype=float)
    return labels[ids]


def leaf_frequencies(leaf: Leaf, classes) -> np.ndarray:
    total = leaf.counts.sum()
    if total > 0:
        return leaf.counts / total
    freq = np.zeros(len(classes))
    freq[list(classes).index(leaf.label)] = 1.0
    return freq


def predict_scores(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Per-class training frequency at the reached leaf, shape (n, K)."""
    X = np.asarray(X, dtype=float)
    _check_columns(t, X)
    ids, leaves = t.apply(X)
    freq = np.array([leaf_frequencies(leaf, t.classes) for leaf in leaves])
    return freq[ids]


def positive_scores(t: DecisionTree, X: np.ndarray) -> np.ndarray:
    """Score for the largest class label (``+1`` in binary problems)."""
    return predict_scores(t, X)[:, -1]


def relevant_features(t: DecisionTree) -> set:
    """Features used by at least one branch node."""
    return {b.feature for b in t.branches()}


# text format ----------------------------------------------------------------


def dumps(t: DecisionTree) -> str:
    """One node per line, two spaces of indentation per level.

    The first line lists the class labels that the leaf counts refer to.
    """
    lines = ["classes " + " ".join(repr(float(c)) for c in t.classes)]

    def emit(node, level):
        pad = "  " * level
        if isinstance(node, Branch):
            lines.append(f"{pad}branch {node.feature} {float(node.threshold)!r}")
            emit(node.left, level + 1)
            emit(node.right, level + 1)
        else:
            counts = " ".join(str(int(c)) for c in node.counts)
            lines.append(f"{pad}leaf {float(node.label)!r} {counts}".rstrip())

    emit(t.root, 0)
    return "\n".join(lines) + "\n"


def loads(text: str) -> DecisionTree:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("classes"):
        raise ValueError("tree text must start with a 'classes' line")
    classes = tuple(float(c) for c in lines[0].split()[1:])
    pos = 1

    def parse(level):
        nonlocal pos
        if pos >= len(lines):
            raise ValueError("unexpected end of tree text")
        raw = lines[pos]
        indent = len(raw) - len(raw.lstrip(" "))
        if indent != 2 * level:
            raise ValueError(f"bad indentation on line {pos + 1}")
        parts = raw.split()
        pos += 1
        if parts[0] == "branch":
            feature, threshold = int(parts[1]), float(parts[2])
            left = parse(level + 1)
            right = parse(level + 1)
            return Branch(feature, threshold, left, right)
        if parts[0] == "leaf":
            counts = np.array([int(c) for c in parts[2:]], dtype=float)
            if counts.size == 0:
                counts = np.zeros(len(classes))
            return Leaf(float(parts[1]), counts)
        raise ValueError(f"unknown node kind {parts[0]!r} on line {pos}")

    root = parse(0)
    if pos != len(lines):
        raise ValueError("trailing lines after tree")
    return DecisionTree(root, classes)


def copy_tree(node: Node) -> Node:
    if isinstance(node, Branch):
        return Branch(node.feature, node.threshold, copy_tree(node.left), copy_tree(node.right))
    return Leaf(node.label, node.counts.copy())


def remap_features(t: DecisionTree, columns) -> DecisionTree:
    """Rewrite local feature indices ``j`` as ``columns[j]``."""
    columns = np.asarray(columns)

    def walk(node):
        if isinstance(node, Branch):
            return Branch(int(columns[node.feature]), node.threshold, walk(node.left), walk(node.right))
        return Leaf(node.label, node.counts.copy())

    return DecisionTree(walk(t.root), t.classes)
