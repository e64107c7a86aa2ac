"""Backend equivalence: the compiled extension against the NumPy reference."""

import numpy as np
import pytest

from emopipe.kernels import BACKEND, _ref

try:
    from emopipe.kernels import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def test_active_backend_reported():
    assert BACKEND in ("compiled", "python")


@needs_core
def test_sosfilt_matches_reference(rng):
    sos = np.array(
        [
            [0.1, 0.05, -0.1, -1.6, 0.81],
            [0.2, 0.0, -0.2, -1.2, 0.52],
            [1.0, -0.3, 0.1, 0.4, 0.2],
        ]
    )
    x = rng.normal(size=(9, 257))
    zi = rng.normal(size=(9, 3, 2))
    np.testing.assert_allclose(_core.sosfilt(sos, x, zi), _ref.sosfilt(sos, x, zi), rtol=1e-10)
    np.testing.assert_allclose(_core.sosfilt(sos, x), _ref.sosfilt(sos, x), rtol=1e-10)


@needs_core
def test_window_variances_match(rng):
    w = rng.normal(size=(64, 321)) * 10.0
    for a, b in zip(_core.window_variances(w), _ref.window_variances(w)):
        np.testing.assert_allclose(a, b, rtol=1e-12)


@needs_core
def test_window_variances_reference_values(rng):
    w = rng.normal(size=(5, 100))
    v0, v1, v2 = _core.window_variances(w)
    np.testing.assert_allclose(v0, np.var(w, axis=1), rtol=1e-12)
    np.testing.assert_allclose(v1, np.var(np.diff(w, axis=1), axis=1), rtol=1e-12)
    np.testing.assert_allclose(v2, np.var(np.diff(w, n=2, axis=1), axis=1), rtol=1e-12)


@needs_core
def test_best_split_matches_reference_random(rng):
    for _ in range(200):
        n = int(rng.integers(2, 80))
        d = int(rng.integers(1, 7))
        n_classes = int(rng.integers(2, 5))
        X = np.ascontiguousarray(rng.normal(size=(n, d)))
        y = rng.integers(0, n_classes, n).astype(np.int32)
        size = int(rng.integers(2, n + 1))
        idx = np.sort(rng.choice(n, size=size, replace=False)).astype(np.int64)
        feats = np.arange(d, dtype=np.int64)
        assert _core.best_split(X, y, idx, feats, n_classes) == _ref.best_split(
            X, y, idx, feats, n_classes
        )


@needs_core
def test_best_split_matches_reference_with_ties(rng):
    # small integer-valued features force exact score ties across columns
    for _ in range(200):
        n = int(rng.integers(4, 40))
        d = int(rng.integers(2, 6))
        X = np.ascontiguousarray(rng.integers(0, 3, size=(n, d)).astype(np.float64))
        y = rng.integers(0, 2, n).astype(np.int32)
        idx = np.arange(n, dtype=np.int64)
        feats = np.arange(d, dtype=np.int64)
        assert _core.best_split(X, y, idx, feats, 2) == _ref.best_split(X, y, idx, feats, 2)


def test_best_split_constant_column():
    X = np.ones((4, 2))
    y = np.array([0, 1, 0, 1], dtype=np.int32)
    idx = np.arange(4, dtype=np.int64)
    feats = np.arange(2, dtype=np.int64)
    f, _, _, _ = _ref.best_split(X, y, idx, feats, 2)
    assert f == -1
