"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so the CMR_DISABLE_NUMBA flag
does not matter here. The first numba call (compilation) is excluded.
"""

import argparse
import timeit

import numpy as np

from codedmr import _accel, kernels


def cases(rng):
    n, pk = 120_000, 7
    keys = rng.random((n, pk))
    draws = rng.exponential(1.0, size=(n, pk))
    return {
        "keyed_value_bits   (Q=10, N=12000, F=32)": (
            kernels.keyed_value_bits_numpy, kernels.keyed_value_bits_numba, (7, 10, 12_000, 32, 12_000)),
        "smallest_k_positions (120000 x 7, k=3)": (
            kernels.smallest_k_positions_numpy, kernels.smallest_k_positions_numba, (keys, 3)),
        "kth_smallest_rows  (120000 x 7, k=3)": (
            kernels.kth_smallest_rows_numpy, kernels.kth_smallest_rows_numba, (draws, 3)),
    }


def best_of(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy timings are meaningful")
    rng = np.random.default_rng(opts.seed)
    print(f"{'kernel':<42} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, (np_fn, nb_fn, args) in cases(rng).items():
        a = np_fn(*args)
        b = nb_fn(*args)  # compiles
        assert np.array_equal(a, b), name
        t_np = best_of(np_fn, args, opts.repeat)
        t_nb = best_of(nb_fn, args, opts.repeat)
        print(f"{name:<42} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
