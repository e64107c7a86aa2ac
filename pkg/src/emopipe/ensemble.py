"""Bagging ensemble of three heterogeneous learners with majority vote.

Member order is fixed (KNN, random forest, CART) so vote traces are
reproducible.  Each member trains on its own bootstrap replicate of the
training data.  A label backed by at least two votes wins; in the four-class
task all three members can disagree, in which case the CART member's vote is
used (deterministic, and CART is the strongest single member).  With two
classes and three voters a three-way split is impossible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .classifiers import (
    DEFAULT_KNN_K,
    DEFAULT_N_TREES,
    CartModel,
    Dataset,
    ForestModel,
    KnnModel,
    _check_row,
    _require_training_labels,
    cart_predict_batch,
    cart_train,
    forest_predict_batch,
    forest_train,
    knn_predict_batch,
    knn_train,
)

MEMBER_NAMES = ("knn", "forest", "cart")

# substream consumed for the forest member's own seed (distinct from the
# member bootstrap streams 10..12)
STREAM_MEMBER_FOREST_SEED = 20


@dataclass(frozen=True)
class TrainedEnsemble:
    knn: KnnModel
    forest: ForestModel
    cart: CartModel
    seed: int
    n_classes: int
    member_streams: tuple[int, int, int]  # bootstrap substream id per member
    tie_break: str = "cart"

    @property
    def members(self):
        return (self.knn, self.forest, self.cart)


def ensemble_train(
    data: Dataset,
    seed: int,
    knn_k: int = DEFAULT_KNN_K,
    n_trees: int = DEFAULT_N_TREES,
    feature_subset: int | None = None,
    min_samples_split: int = 2,
    max_depth=None,
) -> TrainedEnsemble:
    """Train the three members, each on its own seeded bootstrap replicate."""
    _require_training_labels(data)
    n = data.n_rows
    streams = tuple(rng.STREAM_MEMBER_BASE + m for m in range(3))
    replicates = [data.subset(rng.bootstrap_indices(seed, s, n)) for s in streams]
    knn = knn_train(replicates[0], k=min(knn_k, replicates[0].n_rows))
    forest = forest_train(
        replicates[1],
        n_trees=n_trees,
        feature_subset=feature_subset,
        min_samples_split=min_samples_split,
        max_depth=max_depth,
        seed=rng.derive_seed(seed, STREAM_MEMBER_FOREST_SEED),
    )
    cart = cart_train(replicates[2], min_samples_split=min_samples_split, max_depth=max_depth)
    return TrainedEnsemble(
        knn=knn,
        forest=forest,
        cart=cart,
        seed=seed,
        n_classes=data.n_classes,
        member_streams=streams,
    )


def vote(member_votes: np.ndarray) -> np.ndarray:
    """Resolve (n, 3) member votes: >=2 agreeing win, else the CART vote."""
    v0, v1, v2 = member_votes[:, 0], member_votes[:, 1], member_votes[:, 2]
    return np.where(v0 == v1, v0, np.where(v0 == v2, v0, v2))


def ensemble_predict_batch(model: TrainedEnsemble, rows) -> tuple[np.ndarray, np.ndarray]:
    """Predicted labels plus the (n, 3) per-member vote trace."""
    rows = _check_row(rows, model.knn.train_x.shape[1])
    trace = np.stack(
        [
            knn_predict_batch(model.knn, rows),
            forest_predict_batch(model.forest, rows),
            cart_predict_batch(model.cart, rows),
        ],
        axis=1,
    )
    return vote(trace), trace


def ensemble_predict(model: TrainedEnsemble, row) -> tuple[int, tuple[int, int, int]]:
    labels, trace = ensemble_predict_batch(model, np.asarray(row))
    return int(labels[0]), tuple(int(v) for v in trace[0])
