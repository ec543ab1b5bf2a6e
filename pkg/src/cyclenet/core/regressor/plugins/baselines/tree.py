"""
Regression tree with variance-reduction splits

The tree is stored as flat node arrays. A node with feature -1 is a leaf.
Rows with x[feature] <= threshold go left.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

LEAF = -1


@dataclass
class FlatTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __len__(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depth = np.zeros(len(self), dtype=int)
        for i in range(len(self)):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Walk every row down the tree in parallel"""
        x = np.atleast_2d(x)
        node = np.zeros(x.shape[0], dtype=int)
        rows = np.arange(x.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, n = rows[active], node[active]
            go_left = x[r, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return self.value[node]

    def to_document(self) -> Dict[str, Any]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "FlatTree":
        ints = {k: np.array(doc[k], dtype=int) for k in ("feature", "left", "right")}
        return cls(
            ints["feature"],
            np.array(doc["threshold"], dtype=float),
            ints["left"],
            ints["right"],
            np.array(doc["value"], dtype=float),
        )


def best_split(x: np.ndarray, y: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float]]:
    """Split minimising the summed squared error of both children

    Ties go to the lowest feature index, then to the smallest threshold.

    Returns:
        (feature, threshold) or None when no split respects `min_leaf`.
    """
    n = y.size
    best, best_cost = None, np.inf
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs, ys = x[order, j], y[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        n_left = np.arange(1, n)
        n_right = n - n_left
        sse_left = s2[:-1] - s1[:-1] ** 2 / n_left
        sse_right = (s2[-1] - s2[:-1]) - (s1[-1] - s1[:-1]) ** 2 / n_right
        cost = sse_left + sse_right

        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        cost = np.where(valid, cost, np.inf)
        i = int(np.argmin(cost))
        if cost[i] < best_cost:
            best_cost = cost[i]
            mid = 0.5 * (xs[i] + xs[i + 1])
            # Adjacent doubles can round the midpoint up onto the right value
            best = (j, mid if xs[i] <= mid < xs[i + 1] else xs[i])
    return best


def grow_tree(
    x: np.ndarray, y: np.ndarray, max_depth: Optional[int] = None, min_leaf: int = 1
) -> FlatTree:
    """CART regression tree for one output

    Args:
        x:          (n, d) inputs.
        y:          (n,) targets.
        max_depth:  Depth limit, None grows until the leaves are pure.
        min_leaf:   Minimum rows per leaf.
    """
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be >= 0")

    feature, threshold, left, right, value = [], [], [], [], []

    def _new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    stack = [(_new_node(np.arange(y.size)), np.arange(y.size), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        if max_depth is not None and depth >= max_depth:
            continue
        if rows.size < 2 * min_leaf or np.all(ys == ys[0]):
            continue
        split = best_split(x[rows], ys, min_leaf)
        if split is None:
            continue

        j, t = split
        go_left = x[rows, j] <= t
        left_rows, right_rows = rows[go_left], rows[~go_left]
        feature[node], threshold[node] = j, t
        left[node] = _new_node(left_rows)
        right[node] = _new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    return FlatTree(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=float),
    )
