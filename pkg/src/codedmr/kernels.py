"""Hot numeric kernels, each with a numba and a numpy implementation.

The public names at the bottom of the module are bound to one of the two
implementations according to :mod:`codedmr._accel`. Both implementations
must return identical results for identical inputs; ``tests/test_kernels.py``
holds them to that.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)


# ---------------------------------------------------------------- keyed bits


def _mix_np(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _MUL1
    z = (z ^ (z >> _S27)) * _MUL2
    return z ^ (z >> _S31)


def keyed_value_bits_numpy(seed, n_keys, n_subfiles, f, n_live):
    """Bits of every intermediate value v_qn as a ``(Q, N, F)`` uint8 array.

    Word ``w`` of value (q, n) is ``mix(mix(mix(mix(seed) ^ q) ^ n) ^ w)``
    with 1-based q and n, so any server can regenerate any value from the
    job seed alone. Subfiles past ``n_live`` are padding and stay zero.
    """
    n_words = (f + 63) // 64
    with np.errstate(over="ignore"):
        h = _mix_np(np.array([seed], dtype=np.uint64))
        q = np.arange(1, n_keys + 1, dtype=np.uint64)
        n = np.arange(1, n_live + 1, dtype=np.uint64)
        w = np.arange(n_words, dtype=np.uint64)
        hq = _mix_np(h ^ q)
        hqn = _mix_np(hq[:, None] ^ n[None, :])
        words = _mix_np(hqn[:, :, None] ^ w[None, None, :])
    shifts = np.arange(64, dtype=np.uint64)
    bits = (words[..., None] >> shifts) & _ONE
    bits = bits.reshape(n_keys, n_live, n_words * 64)[:, :, :f].astype(np.uint8)
    out = np.zeros((n_keys, n_subfiles, f), dtype=np.uint8)
    out[:, :n_live, :] = bits
    return out


@njit
def _mix_nb(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit
def _keyed_bits_loop(seed, n_keys, n_subfiles, f, n_live):
    out = np.zeros((n_keys, n_subfiles, f), dtype=np.uint8)
    h = _mix_nb(np.uint64(seed))
    for qi in range(n_keys):
        hq = _mix_nb(h ^ np.uint64(qi + 1))
        for ni in range(n_live):
            hqn = _mix_nb(hq ^ np.uint64(ni + 1))
            word = np.uint64(0)
            for b in range(f):
                j = b % 64
                if j == 0:
                    word = _mix_nb(hqn ^ np.uint64(b // 64))
                out[qi, ni, b] = np.uint8((word >> np.uint64(j)) & np.uint64(1))
    return out


def keyed_value_bits_numba(seed, n_keys, n_subfiles, f, n_live):
    return _keyed_bits_loop(np.uint64(seed), n_keys, n_subfiles, f, n_live)


# ------------------------------------------------------- order statistics


def kth_smallest_rows_numpy(x, k):
    """k-th smallest (1-based) entry of every row of a 2-D float array."""
    return np.partition(x, k - 1, axis=1)[:, k - 1].copy()


@njit
def _rank(x, i, j, cols):
    # rank of x[i, j] in its row, ties broken by column index
    v = x[i, j]
    c = 0
    for l in range(cols):
        c += (x[i, l] < v) | ((x[i, l] == v) & (l < j))
    return c


@njit
def kth_smallest_rows_numba(x, k):
    rows, cols = x.shape
    out = np.empty(rows, dtype=np.float64)
    for i in range(rows):
        res = 0.0
        for j in range(cols):
            # branch-free select: cols is small, so cols^2 compares beat sorting
            res = x[i, j] if _rank(x, i, j, cols) == k - 1 else res
        out[i] = res
    return out


def smallest_k_positions_numpy(keys, k):
    """Column positions of the k smallest keys in each row, ascending.

    With continuous random keys ties have probability zero, so this is a
    uniform k-subset of the columns per row.
    """
    idx = np.argsort(keys, axis=1, kind="stable")[:, :k]
    return np.sort(idx, axis=1).astype(np.int64)


@njit
def smallest_k_positions_numba(keys, k):
    rows, cols = keys.shape
    # one spare column so the unconditional store below never overflows
    out = np.empty((rows, k + 1), dtype=np.int64)
    for i in range(rows):
        m = 0
        for j in range(cols):
            out[i, m] = j
            m += _rank(keys, i, j, cols) < k
    return out[:, :k].copy()


# ------------------------------------------------------------- xor folding


def xor_fold_numpy(segments, width):
    """XOR of 1-D bit arrays after zero-padding each to ``width``.

    Works for any integer dtype, including ``object`` arrays of Python ints
    (the symbolic stores used by the GF(2) oracle).
    """
    dtype = segments[0].dtype if segments else np.uint8
    acc = np.zeros(width, dtype=dtype)
    for seg in segments:
        if len(seg):
            acc[: len(seg)] ^= seg
    return acc


# XOR of a handful of short segments is already memory-bound in numpy;
# a compiled version only adds call overhead, so there is one path.
xor_fold = xor_fold_numpy

if USE_NUMBA:
    keyed_value_bits = keyed_value_bits_numba
    kth_smallest_rows = kth_smallest_rows_numba
    smallest_k_positions = smallest_k_positions_numba
else:
    keyed_value_bits = keyed_value_bits_numpy
    kth_smallest_rows = kth_smallest_rows_numpy
    smallest_k_positions = smallest_k_positions_numpy
