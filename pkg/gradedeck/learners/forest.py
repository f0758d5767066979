# gradedeck/learners/forest.py

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .base import AlgorithmId, Learner

log = logging.getLogger(__name__)

LEAF = -1


@dataclass
class Tree:
    """Flat CART layout: node i splits on feature[i] at threshold[i], x <= t goes left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict_vote(self, X: np.ndarray) -> np.ndarray:
        return self.vote[self.apply(X)]

    def to_dict(self) -> Dict[str, List[Any]]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "vote": self.vote.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Tree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=float),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            vote=np.asarray(data["vote"], dtype=np.int64),
        )


def best_split(x: np.ndarray, y: np.ndarray) -> Optional[Tuple[float, float]]:
    """
    Lowest weighted child Gini impurity over midpoints between distinct sorted values.

    Returns (weighted impurity, threshold) or None when x is constant.
    """
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    n_left = np.arange(1, n, dtype=float)
    n_right = n - n_left
    weak_left = np.cumsum(ys)[:-1]
    weak_right = ys.sum() - weak_left
    p_left = weak_left / n_left
    p_right = weak_right / n_right
    impurity = (n_left * 2.0 * p_left * (1.0 - p_left) + n_right * 2.0 * p_right * (1.0 - p_right)) / n
    impurity = np.where(valid, impurity, np.inf)
    pos = int(np.argmin(impurity))
    return float(impurity[pos]), 0.5 * (xs[pos] + xs[pos + 1])


def grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator) -> Tree:
    """Grow until pure, fewer than 2 samples, or no sampled feature can split."""
    d = X.shape[1]
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    vote: List[int] = []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        vote.append(0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        y_node = y[idx]
        n_weak = int(y_node.sum())
        vote[node] = int(n_weak >= idx.size - n_weak)
        if idx.size < 2 or n_weak == 0 or n_weak == idx.size:
            continue
        best: Optional[Tuple[float, int, float]] = None
        for f in rng.choice(d, size=min(mtry, d), replace=False):
            found = best_split(X[idx, f], y_node)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], int(f), found[1])
        if best is None:
            continue
        _, f, t = best
        goes_left = X[idx, f] <= t
        feature[node], threshold[node] = f, t
        left[node], right[node] = new_node(), new_node()
        stack.append((right[node], idx[~goes_left]))
        stack.append((left[node], idx[goes_left]))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        vote=np.asarray(vote, dtype=np.int64),
    )


class ForestLearner(Learner):
    """Bootstrap-aggregated CART trees; the score is the share of trees voting Weak."""

    algorithm = AlgorithmId.RF

    def fit(self, X: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> None:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        mtry = int(self.params.get("mtry"))
        if mtry > d:
            note = f"mtry={mtry} clamped to feature count {d}"
            self.notes.append(note)
            log.warning("forest: %s", note)
            mtry = d
        self.trees_: List[Tree] = []
        for _ in range(self.settings.rf_trees):
            boot = rng.integers(0, n, size=n)
            self.trees_.append(grow_tree(X[boot], y[boot], mtry, rng))

    def votes(self, X: np.ndarray) -> np.ndarray:
        """(n_rows, n_trees) matrix of 0/1 Weak votes."""
        X = np.asarray(X, dtype=float)
        return np.column_stack([t.predict_vote(X) for t in self.trees_])

    def predict_weak(self, X: np.ndarray) -> np.ndarray:
        return self.votes(X).mean(axis=1)

    def state_dict(self) -> Dict[str, Any]:
        return {"trees": [t.to_dict() for t in self.trees_]}

    def load_state(self, state: Mapping[str, Any]) -> None:
        self.trees_ = [Tree.from_dict(t) for t in state["trees"]]
