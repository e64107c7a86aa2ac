"""Benchmark the compiled kernels against the NumPy reference backend.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--quick]

Times the three hot kernels on realistic shapes (a trial batch through an
order-8 band-pass, windowed Hjorth variances, a root-node split search) and
reports the speedup plus the worst numeric disagreement between backends.
"""

import argparse
import time

import numpy as np

from emopipe import filters
from emopipe.kernels import _ref
from emopipe.model import CANONICAL_BANDS

try:
    from emopipe.kernels import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench(name, make_args, ref_fn, core_fn, repeats, diff_fn):
    args = make_args()
    ref_out = ref_fn(*args)
    row = {"name": name, "ref": timeit(lambda: ref_fn(*args), repeats)}
    if core_fn is not None:
        core_out = core_fn(*args)
        row["core"] = timeit(lambda: core_fn(*args), repeats)
        row["diff"] = diff_fn(ref_out, core_out)
    return row


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller shapes, fewer repeats")
    opts = parser.parse_args()

    gen = np.random.default_rng(0)
    n_signals = 36 if not opts.quick else 8
    n_samples = 7776 if not opts.quick else 1024
    n_rows = 1280 if not opts.quick else 256
    n_cols = 512 if not opts.quick else 64
    repeats = 3

    theta = filters.design_bandpass(CANONICAL_BANDS[0], 128.0)
    sos = np.ascontiguousarray(theta.sections)
    signals = np.ascontiguousarray(gen.normal(size=(n_signals, n_samples)))

    windows = np.ascontiguousarray(gen.normal(size=(n_signals * 24, 1280)))

    X = np.ascontiguousarray(gen.normal(size=(n_rows, n_cols)))
    y = gen.integers(0, 2, n_rows).astype(np.int32)
    idx = np.arange(n_rows, dtype=np.int64)
    feats = np.arange(n_cols, dtype=np.int64)

    def max_abs(a, b):
        return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))

    def vars_diff(a, b):
        return max(max_abs(u, v) for u, v in zip(a, b))

    rows = [
        bench(
            f"sosfilt {n_signals}x{n_samples}, 8 sections",
            lambda: (sos, signals),
            _ref.sosfilt,
            _core.sosfilt if _core else None,
            repeats,
            max_abs,
        ),
        bench(
            f"window_variances {windows.shape[0]}x1280",
            lambda: (windows,),
            _ref.window_variances,
            _core.window_variances if _core else None,
            repeats,
            vars_diff,
        ),
        bench(
            f"best_split {n_rows}x{n_cols}",
            lambda: (X, y, idx, feats, 2),
            _ref.best_split,
            _core.best_split if _core else None,
            repeats,
            lambda a, b: 0.0 if a == b else float("nan"),
        ),
    ]

    print(f"{'kernel':<38} {'numpy':>10} {'compiled':>10} {'speedup':>8} {'max diff':>10}")
    for row in rows:
        if "core" in row:
            print(
                f"{row['name']:<38} {row['ref'] * 1e3:>8.1f}ms {row['core'] * 1e3:>8.1f}ms "
                f"{row['ref'] / row['core']:>7.1f}x {row['diff']:>10.2e}"
            )
        else:
            print(f"{row['name']:<38} {row['ref'] * 1e3:>8.1f}ms {'n/a':>10} {'':>8}")
    if _core is None:
        print("compiled extension not built; showing the NumPy reference only")


if __name__ == "__main__":
    main()
