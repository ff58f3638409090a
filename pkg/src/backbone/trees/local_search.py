"""Local-search improvement of classification trees with random restarts.

The objective is ``g(T) = errors(T) + complexity_weight * branches(T)`` on
the training data, subject to the depth limit and the minimum leaf size.
Each pass visits the nodes of the current tree in random order and applies
the best strictly improving move at each node:

* branch node: replace its split by the best (feature, threshold) while
  keeping both subtrees (in either order), or collapse the subtree to a leaf;
* leaf above the depth limit: split it with the best stump.

Passes repeat until none improves.  Leaf labels are always the majority
class of the training rows that reach them.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..data import Dataset
from ..subproblems import derived_rng
from ._splits import Impurity, SortedColumns, best_reassignment, best_split
from .cart import TreeParams, class_labels, fit_cart, majority
from .model import Branch, DecisionTree, Leaf, copy_tree

_EPS = 1e-9


def _get(root, path):
    node = root
    for step in path:
        if not isinstance(node, Branch):
            return None
        node = node.left if step == 0 else node.right
    return node


def _set(root, path, new):
    if not path:
        return new
    parent = _get(root, path[:-1])
    if path[-1] == 0:
        parent.left = new
    else:
        parent.right = new
    return root


def _paths(node, path=()):
    yield path
    if isinstance(node, Branch):
        yield from _paths(node.left, path + (0,))
        yield from _paths(node.right, path + (1,))


def _rows_at(root, path, X, rows):
    node = root
    for step in path:
        go_left = X[rows, node.feature] < node.threshold
        rows = rows[go_left] if step == 0 else rows[~go_left]
        node = node.left if step == 0 else node.right
    return rows


class _Evaluator:
    def __init__(self, X, y_idx, classes, params: TreeParams):
        self.X = X
        self.y_idx = y_idx
        self.classes = classes
        self.params = params
        self.K = len(classes)

    def relabel(self, node, rows):
        """Recount and relabel every leaf of ``node`` from ``rows``; returns
        ``(errors, branches, feasible)``."""
        if isinstance(node, Leaf):
            node.counts = np.bincount(self.y_idx[rows], minlength=self.K).astype(float)
            if rows.size:
                node.label = majority(node.counts, self.classes)
            err = rows.size - node.counts[self.classes.index(node.label)]
            return err, 0, rows.size >= self.params.min_bucket
        go_left = self.X[rows, node.feature] < node.threshold
        el, bl, fl = self.relabel(node.left, rows[go_left])
        er, br, fr = self.relabel(node.right, rows[~go_left])
        return el + er, bl + br + 1, fl and fr

    def cost(self, node, rows):
        err, br, ok = self.relabel(node, rows)
        return err + self.params.complexity_weight * br, ok

    def wrong(self, node, rows):
        """Boolean per row id: is the row misclassified by ``node``?"""
        out = np.zeros(self.X.shape[0])
        if rows.size:
            t = DecisionTree(node, self.classes)
            ids, leaves = t.apply(self.X[rows])
            labels = np.array([lf.label for lf in leaves])[ids]
            out[rows] = labels != np.asarray(self.classes)[self.y_idx[rows]]
        return out


def _node_moves(ev: _Evaluator, sc: SortedColumns, node, rows, depth, features):
    """Candidate replacement subtrees for ``node`` with their local cost."""
    p = ev.params
    moves = []
    counts = np.bincount(ev.y_idx[rows], minlength=ev.K).astype(float)
    if isinstance(node, Branch):
        leaf = Leaf(majority(counts, ev.classes), counts)
        moves.append(leaf)
        if isinstance(node.left, Leaf) and isinstance(node.right, Leaf):
            # with free leaf labels the best stump is exact
            found = best_split(sc, rows, ev.y_idx, ev.K, p.min_bucket, Impurity.MISCLASSIFICATION, features)
            if found is not None:
                j, thr, _, lc, rc = found
                moves.append(Branch(j, thr, Leaf(majority(lc, ev.classes), lc), Leaf(majority(rc, ev.classes), rc)))
            return moves
        wl = ev.wrong(node.left, rows)
        wr = ev.wrong(node.right, rows)
        # both orderings of the kept subtrees
        for a, b, ea, eb in ((node.left, node.right, wl, wr), (node.right, node.left, wr, wl)):
            for _, j, thr in best_reassignment(sc, rows, ea, eb, p.min_bucket, features):
                if a is node.left and j == node.feature and thr == node.threshold:
                    continue
                cand = Branch(j, thr, copy_tree(a), copy_tree(b))
                _, ok = ev.cost(cand, rows)
                if ok:
                    moves.append(cand)
                    break
    elif depth < p.max_depth:
        found = best_split(sc, rows, ev.y_idx, ev.K, p.min_bucket, Impurity.MISCLASSIFICATION, features)
        if found is not None:
            j, thr, _, lc, rc = found
            moves.append(Branch(j, thr, Leaf(majority(lc, ev.classes), lc), Leaf(majority(rc, ev.classes), rc)))
    return moves


def local_search(tree: DecisionTree, d: Dataset, params: TreeParams, rng: np.random.Generator,
                 sorted_cols: Optional[SortedColumns] = None, features=None, max_passes: int = 100):
    """Improve ``tree`` until no single-node move lowers the objective."""
    classes, y_idx = class_labels(d)
    ev = _Evaluator(d.X, y_idx, classes, params)
    sc = sorted_cols if sorted_cols is not None else SortedColumns(d.X)
    all_rows = np.arange(d.n)
    root = copy_tree(tree.root)
    total, _ = ev.cost(root, all_rows)
    passes = 0
    for passes in range(1, max_passes + 1):
        improved = False
        paths = list(_paths(root))
        for i in rng.permutation(len(paths)):
            path = paths[i]
            node = _get(root, path)
            if node is None:
                continue
            rows = _rows_at(root, path, d.X, all_rows)
            before, _ = ev.cost(copy_tree(node), rows)
            best, best_cost = None, before
            for cand in _node_moves(ev, sc, node, rows, len(path), features):
                c, ok = ev.cost(cand, rows)
                if ok and c < best_cost - _EPS:
                    best, best_cost = cand, c
            if best is not None:
                root = _set(root, path, best)
                total -= before - best_cost
                improved = True
        if not improved:
            break
    ev.relabel(root, all_rows)
    return DecisionTree(root, classes), float(total), passes


def random_tree(d: Dataset, params: TreeParams, rng: np.random.Generator, features=None,
                sorted_cols: Optional[SortedColumns] = None) -> DecisionTree:
    """Random tree honoring the depth limit and the minimum leaf size.

    Each node splits on a uniformly drawn feature at that feature's best
    Gini threshold; nodes where no feasible threshold exists become leaves.
    """
    classes, y_idx = class_labels(d)
    K = len(classes)
    sc = sorted_cols if sorted_cols is not None else SortedColumns(d.X)
    feats = np.arange(d.p) if features is None else np.asarray(features)

    def grow(rows, depth):
        counts = np.bincount(y_idx[rows], minlength=K).astype(float)
        if depth < params.max_depth and rows.size >= 2 * params.min_bucket:
            for j in rng.permutation(feats)[:10]:
                found = best_split(sc, rows, y_idx, K, params.min_bucket, Impurity.GINI, [j])
                if found is not None:
                    thr = found[1]
                    go_left = d.X[rows, j] < thr
                    return Branch(int(j), thr, grow(rows[go_left], depth + 1), grow(rows[~go_left], depth + 1))
        return Leaf(majority(counts, classes), counts)

    return DecisionTree(grow(np.arange(d.n), 0), classes)


def fit_oct_local_search(d: Dataset, params: TreeParams, restarts: int = 3, seed: int = 0, features=None,
                         start: Optional[DecisionTree] = None) -> DecisionTree:
    """Best local optimum over ``restarts`` starts.

    The first start is the CART tree (or ``start`` when given); the others
    are random feasible trees.  Ties in the objective go to the earlier
    restart.
    """
    if not d.is_classification:
        raise ValueError("trees need a classification task")
    sc = SortedColumns(d.X)
    best, best_g = None, np.inf
    for r in range(max(1, restarts)):
        rng = derived_rng(seed, r)
        if r == 0:
            init = start if start is not None else fit_cart(d, params, features, sorted_cols=sc)
        else:
            init = random_tree(d, params, rng, features, sc)
        tree, g, _ = local_search(init, d, params, rng, sc, features)
        if g < best_g - _EPS:
            best, best_g = tree, g
    return best
