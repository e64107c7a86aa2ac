"""From-scratch base learners: KNN, CART and a random forest.

All three share one contract: train on a Dataset (float64 features, integer
class ordinals), predict integer ordinals.  Tie-breaks are fixed and
documented so every prediction is reproducible:

* KNN distance ties keep the lower training-row index; vote ties pick the
  smallest class ordinal.
* CART split ties prefer the lower column index, then the lower threshold;
  leaf ties pick the smallest class ordinal.
* Forest vote ties pick the smallest class ordinal.

Randomness (bootstraps, per-node feature subsets) comes exclusively from the
keyed substreams in :mod:`emopipe.rng`, so identical seeds are bit
reproducible across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .errors import ValidationError

DEFAULT_KNN_K = 5
DEFAULT_N_TREES = 100


@dataclass(frozen=True)
class Dataset:
    """Feature rows plus integer class ordinals (and optional subject ids)."""

    X: np.ndarray
    y: np.ndarray
    n_classes: int
    subjects: np.ndarray | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise ValidationError(f"{y.shape[0]} labels for {X.shape[0]} rows")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise ValidationError(
                f"labels outside [0, {self.n_classes}): {sorted(set(y) - set(range(self.n_classes)))}"
            )
        if not np.isfinite(X).all():
            raise ValidationError("features contain non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.subjects is not None:
            subjects = np.asarray(self.subjects, dtype=np.int64)
            if subjects.shape != y.shape:
                raise ValidationError("subjects length does not match labels")
            object.__setattr__(self, "subjects", subjects)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.X[idx],
            self.y[idx],
            self.n_classes,
            None if self.subjects is None else self.subjects[idx],
        )


def _require_training_labels(data: Dataset) -> None:
    if np.unique(data.y).size < 2:
        raise ValidationError("training data must contain at least 2 distinct labels")


def _check_row(x, n_features: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    rows = x[None, :] if x.ndim == 1 else x
    if rows.ndim != 2 or rows.shape[1] != n_features:
        raise ValidationError(
            f"feature dimension mismatch: model expects {n_features}, got shape {x.shape}"
        )
    return rows


# ---------------------------------------------------------------------------
# KNN
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    k: int
    train_x: np.ndarray  # standardized, constant columns zeroed
    train_y: np.ndarray
    mean: np.ndarray
    scale: np.ndarray  # per-column std; 1.0 where the column is constant
    active: np.ndarray  # False where the training column was constant
    n_classes: int


def knn_train(data: Dataset, k: int = DEFAULT_KNN_K) -> KnnModel:
    """Store z-scored training rows; constant columns contribute no distance."""
    if not (1 <= k <= data.n_rows):
        raise ValidationError(f"k={k} outside [1, {data.n_rows}]")
    mean = data.X.mean(axis=0)
    std = data.X.std(axis=0)
    active = std > 0.0
    scale = np.where(active, std, 1.0)
    train = (data.X - mean) / scale
    train[:, ~active] = 0.0
    return KnnModel(
        k=k,
        train_x=train,
        train_y=data.y.copy(),
        mean=mean,
        scale=scale,
        active=active,
        n_classes=data.n_classes,
    )


def knn_predict_batch(model: KnnModel, rows) -> np.ndarray:
    rows = _check_row(rows, model.train_x.shape[1])
    z = (rows - model.mean) / model.scale
    z[:, ~model.active] = 0.0
    # ||z - t||^2 expanded; stable argsort keeps the lower train index on ties
    d2 = (
        (z * z).sum(axis=1)[:, None]
        + (model.train_x * model.train_x).sum(axis=1)[None, :]
        - 2.0 * z @ model.train_x.T
    )
    nearest = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
    votes = model.train_y[nearest]
    out = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[0]):
        out[i] = np.argmax(np.bincount(votes[i], minlength=model.n_classes))
    return out


def knn_predict(model: KnnModel, row) -> int:
    return int(knn_predict_batch(model, np.asarray(row))[0])


# ---------------------------------------------------------------------------
# CART
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CartModel:
    """Flat-array binary tree; node i is a leaf iff feature[i] < 0."""

    feature: np.ndarray  # int64, -1 at leaves
    threshold: np.ndarray  # float64
    left: np.ndarray  # int64 child slots
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) class counts of the node's rows
    n_features: int
    n_classes: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max())


def _grow_tree(
    X: np.ndarray,
    y32: np.ndarray,
    n_classes: int,
    root_idx: np.ndarray,
    min_samples_split: int,
    max_depth,
    sample_features=None,
) -> CartModel:
    """Greedy Gini growth; nodes are visited depth-first, left child first.

    ``sample_features()`` returns the ascending candidate columns for one node
    (None means all columns).  When the sampled candidates are all constant on
    a node the node becomes a leaf.
    """
    d = X.shape[1]
    all_feats = np.arange(d, dtype=np.int64)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(None)
        return len(feature) - 1

    stack = [(np.asarray(root_idx, dtype=np.int64), 0, new_node())]
    while stack:
        idx, depth, slot = stack.pop()
        cnt = np.bincount(y32[idx], minlength=n_classes).astype(np.float64)
        counts[slot] = cnt
        if (
            (cnt > 0).sum() <= 1
            or idx.size < min_samples_split
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        feats = all_feats if sample_features is None else sample_features()
        f, thr, _, n_left = kernels.best_split(X, y32, idx, feats, n_classes)
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if left_idx.size == 0 or right_idx.size == 0:  # cannot happen; stay total
            continue
        feature[slot] = f
        threshold[slot] = thr
        lslot = new_node()
        rslot = new_node()
        left[slot] = lslot
        right[slot] = rslot
        stack.append((right_idx, depth + 1, rslot))
        stack.append((left_idx, depth + 1, lslot))

    return CartModel(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.float64),
        n_features=d,
        n_classes=n_classes,
    )


def cart_train(data: Dataset, min_samples_split: int = 2, max_depth=None) -> CartModel:
    """Fully-grown greedy tree (Gini, midpoint thresholds, <= goes left)."""
    if min_samples_split < 2:
        raise ValidationError(f"min_samples_split must be >= 2, got {min_samples_split}")
    y32 = np.ascontiguousarray(data.y, dtype=np.int32)
    root = np.arange(data.n_rows, dtype=np.int64)
    return _grow_tree(data.X, y32, data.n_classes, root, min_samples_split, max_depth)


def cart_predict_batch(model: CartModel, rows) -> np.ndarray:
    rows = _check_row(rows, model.n_features)
    node = np.zeros(rows.shape[0], dtype=np.int64)
    pending = np.nonzero(model.feature[node] >= 0)[0]
    while pending.size:
        nd = node[pending]
        go_left = rows[pending, model.feature[nd]] <= model.threshold[nd]
        node[pending] = np.where(go_left, model.left[nd], model.right[nd])
        pending = pending[model.feature[node[pending]] >= 0]
    return np.argmax(model.counts[node], axis=1)


def cart_predict(model: CartModel, row) -> int:
    return int(cart_predict_batch(model, np.asarray(row))[0])


def cart_training_accuracy(model: CartModel, data: Dataset) -> float:
    return float(np.mean(cart_predict_batch(model, data.X) == data.y))


# ---------------------------------------------------------------------------
# Random forest
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForestModel:
    trees: tuple[CartModel, ...]
    seed: int
    tree_streams: tuple[int, ...]  # substream id per tree, for replicate replay
    feature_subset: int
    bootstrap: bool
    n_features: int
    n_classes: int


def forest_train(
    data: Dataset,
    n_trees: int = DEFAULT_N_TREES,
    feature_subset: int | None = None,
    min_samples_split: int = 2,
    max_depth=None,
    seed: int = 0,
    bootstrap: bool = True,
) -> ForestModel:
    """Bagged trees with per-node random feature subsets.

    ``feature_subset`` defaults to floor(sqrt(n_features)).  Tree t draws its
    bootstrap sample and then its per-node subsets from the (seed,
    STREAM_TREE_BASE + t) substream, in node-visit order; when the subset size
    covers all columns the candidate set is the full ascending range, so a
    1-tree, full-subset, no-bootstrap forest grows exactly cart_train's tree.
    """
    if n_trees < 1:
        raise ValidationError(f"n_trees must be >= 1, got {n_trees}")
    d = data.n_features
    m = int(feature_subset) if feature_subset is not None else max(1, int(math.isqrt(d)))
    if not (1 <= m <= d):
        raise ValidationError(f"feature_subset={m} outside [1, {d}]")
    y32 = np.ascontiguousarray(data.y, dtype=np.int32)
    trees = []
    streams = []
    for t in range(n_trees):
        stream_id = rng.STREAM_TREE_BASE + t
        gen = rng.substream(seed, stream_id)
        if bootstrap:
            root = gen.integers(0, data.n_rows, size=data.n_rows).astype(np.int64)
        else:
            root = np.arange(data.n_rows, dtype=np.int64)
        if m >= d:
            sampler = None
        else:
            def sampler(gen=gen):
                return np.sort(gen.choice(d, size=m, replace=False)).astype(np.int64)
        trees.append(
            _grow_tree(data.X, y32, data.n_classes, root, min_samples_split, max_depth, sampler)
        )
        streams.append(stream_id)
    return ForestModel(
        trees=tuple(trees),
        seed=seed,
        tree_streams=tuple(streams),
        feature_subset=m,
        bootstrap=bootstrap,
        n_features=d,
        n_classes=data.n_classes,
    )


def forest_predict_batch(model: ForestModel, rows) -> np.ndarray:
    rows = _check_row(rows, model.n_features)
    votes = np.zeros((rows.shape[0], model.n_classes), dtype=np.int64)
    for tree in model.trees:
        pred = cart_predict_batch(tree, rows)
        votes[np.arange(rows.shape[0]), pred] += 1
    return np.argmax(votes, axis=1)


def forest_predict(model: ForestModel, row) -> int:
    return int(forest_predict_batch(model, np.asarray(row))[0])
