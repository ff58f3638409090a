"""Classification trees: model, greedy induction and local search."""

from ._splits import Impurity
from .cart import TreeParams, errors, fit_cart, tree_objective
from .local_search import fit_oct_local_search
from .model import Branch, DecisionTree, Leaf, dumps, loads, predict, predict_scores, relevant_features
from .tuning import TreeMethod, cv_tree
