"""Versioned binary envelope for trained models.

Little-endian, same conventions as the PSR1 recording format:

* magic b"PSM1", version u16 (=1), model type u8
  (1=KNN, 2=CART, 3=forest, 4=ensemble);
* u32-length-prefixed JSON metadata (sorted keys);
* u16 array count, then per array: u8-length name, u8-length dtype string,
  u8 ndim, u32 dims, raw C-order payload.

Deliberately not interchangeable with any external ML tool; the payload is
exactly the arrays the in-memory models carry, so a load reproduces the
model's predictions bit for bit.  Nested models (forest trees, ensemble
members) are stored as uint8 blobs of the same envelope.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .classifiers import CartModel, ForestModel, KnnModel
from .ensemble import TrainedEnsemble
from .errors import CorruptionError, FormatError

MAGIC = b"PSM1"
VERSION = 1

_TYPE_KNN = 1
_TYPE_CART = 2
_TYPE_FOREST = 3
_TYPE_ENSEMBLE = 4

_ALLOWED_DTYPES = {"<f8", "<i8", "u1"}


def _pack(model_type: int, meta: dict, arrays: list) -> bytes:
    parts = [MAGIC, struct.pack("<HB", VERSION, model_type)]
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts.append(struct.pack("<I", len(meta_bytes)))
    parts.append(meta_bytes)
    parts.append(struct.pack("<H", len(arrays)))
    for name, arr in arrays:
        arr = np.ascontiguousarray(arr)
        dtype = {np.float64: "<f8", np.int64: "<i8", np.uint8: "u1"}[arr.dtype.type]
        name_b = name.encode("utf-8")
        dtype_b = dtype.encode("utf-8")
        parts.append(struct.pack("<B", len(name_b)))
        parts.append(name_b)
        parts.append(struct.pack("<B", len(dtype_b)))
        parts.append(dtype_b)
        parts.append(struct.pack("<B", arr.ndim))
        for dim in arr.shape:
            parts.append(struct.pack("<I", dim))
        parts.append(arr.astype(dtype).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes, context: str):
        self.blob = blob
        self.offset = 0
        self.context = context

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.blob):
            raise CorruptionError(f"{self.context}: truncated model envelope")
        out = self.blob[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _unpack(blob: bytes, context: str):
    r = _Reader(blob, context)
    magic = r.take(4)
    if magic != MAGIC:
        raise FormatError(f"{context}: bad magic {magic!r}, expected {MAGIC!r}")
    version, model_type = r.unpack("<HB")
    if version != VERSION:
        raise FormatError(f"{context}: unsupported envelope version {version}")
    (meta_len,) = r.unpack("<I")
    try:
        meta = json.loads(r.take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptionError(f"{context}: unreadable metadata") from exc
    (n_arrays,) = r.unpack("<H")
    arrays = {}
    for _ in range(n_arrays):
        (name_len,) = r.unpack("<B")
        name = r.take(name_len).decode("utf-8")
        (dtype_len,) = r.unpack("<B")
        dtype = r.take(dtype_len).decode("utf-8")
        if dtype not in _ALLOWED_DTYPES:
            raise CorruptionError(f"{context}: unexpected dtype {dtype!r}")
        (ndim,) = r.unpack("<B")
        shape = tuple(r.unpack("<" + "I" * ndim)) if ndim else ()
        count = int(np.prod(shape)) if shape else 1
        data = r.take(count * np.dtype(dtype).itemsize)
        arrays[name] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    if r.offset != len(blob):
        raise CorruptionError(f"{context}: {len(blob) - r.offset} trailing bytes")
    return model_type, meta, arrays


def _knn_to_blob(model: KnnModel) -> bytes:
    meta = {"k": model.k, "n_classes": model.n_classes}
    arrays = [
        ("train_x", model.train_x),
        ("train_y", model.train_y),
        ("mean", model.mean),
        ("scale", model.scale),
        ("active", model.active.astype(np.uint8)),
    ]
    return _pack(_TYPE_KNN, meta, arrays)


def _knn_from(meta, arrays) -> KnnModel:
    return KnnModel(
        k=int(meta["k"]),
        train_x=arrays["train_x"],
        train_y=arrays["train_y"],
        mean=arrays["mean"],
        scale=arrays["scale"],
        active=arrays["active"].astype(bool),
        n_classes=int(meta["n_classes"]),
    )


def _cart_to_blob(model: CartModel) -> bytes:
    meta = {"n_features": model.n_features, "n_classes": model.n_classes}
    arrays = [
        ("feature", model.feature),
        ("threshold", model.threshold),
        ("left", model.left),
        ("right", model.right),
        ("counts", model.counts),
    ]
    return _pack(_TYPE_CART, meta, arrays)


def _cart_from(meta, arrays) -> CartModel:
    return CartModel(
        feature=arrays["feature"],
        threshold=arrays["threshold"],
        left=arrays["left"],
        right=arrays["right"],
        counts=arrays["counts"],
        n_features=int(meta["n_features"]),
        n_classes=int(meta["n_classes"]),
    )


def _forest_to_blob(model: ForestModel) -> bytes:
    meta = {
        "seed": model.seed,
        "tree_streams": list(model.tree_streams),
        "feature_subset": model.feature_subset,
        "bootstrap": model.bootstrap,
        "n_features": model.n_features,
        "n_classes": model.n_classes,
    }
    arrays = [
        (f"tree_{i:05d}", np.frombuffer(_cart_to_blob(tree), dtype=np.uint8))
        for i, tree in enumerate(model.trees)
    ]
    return _pack(_TYPE_FOREST, meta, arrays)


def _forest_from(meta, arrays, context) -> ForestModel:
    trees = []
    for i in range(len(arrays)):
        blob = arrays[f"tree_{i:05d}"].tobytes()
        t_type, t_meta, t_arrays = _unpack(blob, f"{context}[tree {i}]")
        if t_type != _TYPE_CART:
            raise CorruptionError(f"{context}: tree {i} is not a CART envelope")
        trees.append(_cart_from(t_meta, t_arrays))
    return ForestModel(
        trees=tuple(trees),
        seed=int(meta["seed"]),
        tree_streams=tuple(int(s) for s in meta["tree_streams"]),
        feature_subset=int(meta["feature_subset"]),
        bootstrap=bool(meta["bootstrap"]),
        n_features=int(meta["n_features"]),
        n_classes=int(meta["n_classes"]),
    )


def model_to_bytes(model) -> bytes:
    if isinstance(model, KnnModel):
        return _knn_to_blob(model)
    if isinstance(model, CartModel):
        return _cart_to_blob(model)
    if isinstance(model, ForestModel):
        return _forest_to_blob(model)
    if isinstance(model, TrainedEnsemble):
        meta = {
            "seed": model.seed,
            "n_classes": model.n_classes,
            "tie_break": model.tie_break,
            "member_streams": list(model.member_streams),
        }
        arrays = [
            ("member_knn", np.frombuffer(_knn_to_blob(model.knn), dtype=np.uint8)),
            ("member_forest", np.frombuffer(_forest_to_blob(model.forest), dtype=np.uint8)),
            ("member_cart", np.frombuffer(_cart_to_blob(model.cart), dtype=np.uint8)),
        ]
        return _pack(_TYPE_ENSEMBLE, meta, arrays)
    raise FormatError(f"cannot serialize model of type {type(model).__name__}")


def model_from_bytes(blob: bytes, context: str = "model"):
    model_type, meta, arrays = _unpack(blob, context)
    if model_type == _TYPE_KNN:
        return _knn_from(meta, arrays)
    if model_type == _TYPE_CART:
        return _cart_from(meta, arrays)
    if model_type == _TYPE_FOREST:
        return _forest_from(meta, arrays, context)
    if model_type == _TYPE_ENSEMBLE:
        members = {}
        for key in ("member_knn", "member_forest", "member_cart"):
            m_type, m_meta, m_arrays = _unpack(arrays[key].tobytes(), f"{context}[{key}]")
            if key == "member_knn":
                members["knn"] = _knn_from(m_meta, m_arrays)
            elif key == "member_forest":
                members["forest"] = _forest_from(m_meta, m_arrays, f"{context}[{key}]")
            else:
                members["cart"] = _cart_from(m_meta, m_arrays)
        return TrainedEnsemble(
            knn=members["knn"],
            forest=members["forest"],
            cart=members["cart"],
            seed=int(meta["seed"]),
            n_classes=int(meta["n_classes"]),
            member_streams=tuple(int(s) for s in meta["member_streams"]),
            tie_break=str(meta["tie_break"]),
        )
    raise FormatError(f"{context}: unknown model type {model_type}")


def save_model(model, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), context=str(path))
