"""Pure numpy implementations of the hot kernels.

Every routine here has a twin in ``_ckernels.pyx``. Both must produce
bit-identical results: the hash mixing is integer-exact, and the sum tree
recomputes every internal node as ``left + right`` in the same layout, so
floating point association never differs between backends.
"""
from __future__ import annotations

import numpy as np

NAME = "python"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)

# templates per chunk when drawing pairs, bounds temporary memory
_CHUNK = 1 << 14


def splitmix64(z: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64 finaliser on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64) + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def draw_pairs(th, hc, seed_key, threshold):
    """Indices ``(ti, ci)`` of every (template, catalyst) pair whose keyed
    hash falls below ``threshold`` (a 53-bit integer).

    Output is ordered by template index, then catalyst index.
    """
    th = np.ascontiguousarray(th, dtype=np.uint64)
    hc = np.ascontiguousarray(hc, dtype=np.uint64)
    if th.size == 0 or hc.size == 0 or threshold <= 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    ck = splitmix64(hc ^ np.uint64(seed_key))
    thr = np.uint64(threshold)
    out_t, out_c = [], []
    for start in range(0, th.size, _CHUNK):
        block = th[start:start + _CHUNK]
        h = splitmix64(block[:, None] ^ ck[None, :])
        ti, ci = np.nonzero((h >> _S11) < thr)
        out_t.append(ti.astype(np.int64) + start)
        out_c.append(ci.astype(np.int64))
    return np.concatenate(out_t), np.concatenate(out_c)


class SumTree:
    """Complete binary tree of non-negative weights with O(log n) sampling.

    Leaf ``i`` lives at ``capacity + i``; node ``k`` holds
    ``tree[2k] + tree[2k + 1]``.
    """

    def __init__(self, capacity: int = 16):
        cap = 1
        while cap < max(capacity, 2):
            cap <<= 1
        self.capacity = cap
        self.tree = np.zeros(2 * cap, dtype=np.float64)

    @property
    def total(self) -> float:
        return float(self.tree[1])

    def get(self, i: int) -> float:
        return float(self.tree[self.capacity + i])

    def leaves(self, n: int) -> np.ndarray:
        return self.tree[self.capacity:self.capacity + n].copy()

    def grow(self, min_capacity: int) -> None:
        if min_capacity <= self.capacity:
            return
        cap = self.capacity
        while cap < min_capacity:
            cap <<= 1
        old = self.tree[self.capacity:2 * self.capacity]
        self.capacity = cap
        self.tree = np.zeros(2 * cap, dtype=np.float64)
        self.tree[cap:cap + old.size] = old
        self._rebuild()

    def _rebuild(self) -> None:
        t = self.tree
        lo = self.capacity
        while lo > 1:
            hi = lo
            lo >>= 1
            t[lo:hi] = t[2 * lo:2 * hi:2] + t[2 * lo + 1:2 * hi:2]

    def set1(self, i: int, value: float) -> None:
        t = self.tree
        k = self.capacity + i
        t[k] = value
        k >>= 1
        while k:
            t[k] = t[2 * k] + t[2 * k + 1]
            k >>= 1

    def set(self, idx, values) -> None:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return
        values = np.asarray(values, dtype=np.float64)
        if idx.size <= 4:
            for i, v in zip(idx.tolist(), values.tolist()):
                self.set1(i, v)
            return
        t = self.tree
        k = idx + self.capacity
        t[k] = values
        k = np.unique(k >> 1)
        while k[-1] >= 1:
            t[k] = t[2 * k] + t[2 * k + 1]
            if k[-1] == 1:
                break
            k = np.unique(k >> 1)

    def select(self, target: float) -> int:
        """Leaf whose cumulative interval contains ``target``.

        Never descends into an empty subtree, so a positive leaf is returned
        whenever the total is positive.
        """
        t = self.tree
        k = 1
        cap = self.capacity
        while k < cap:
            left = t[2 * k]
            if target < left or t[2 * k + 1] <= 0.0:
                k = 2 * k
            else:
                target -= left
                k = 2 * k + 1
        return int(k - cap)


def propensities(idx, rate, mode, ia, ib, id_, ie, x):
    """Propensity of each channel in ``idx`` from the slot count vector ``x``.

    Modes: 0 ``c*x[a]``; 1 ``c*x[a]*x[b]``; 2 ``c*x[a]*(x[a]-1)``;
    3 ``c*(x[a]-x[d])*x[b]``; 4 ``c*(x[a]*x[b] + x[d]*x[e])``;
    5 ``c*(x[a]+x[d])``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    m = mode[idx]
    a = ia[idx]
    b = ib[idx]
    d = id_[idx]
    e = ie[idx]
    xa = x[a]
    xb = np.where(b >= 0, x[np.maximum(b, 0)], 0)
    xd = np.where(d >= 0, x[np.maximum(d, 0)], 0)
    xe = np.where(e >= 0, x[np.maximum(e, 0)], 0)
    first = np.where(m == 3, xa - xd, xa)
    first = np.where(m == 4, xa * xb + xd * xe, first)
    first = np.where(m == 5, xa + xd, first)
    second = np.ones_like(xa)
    second = np.where((m == 1) | (m == 3), xb, second)
    second = np.where(m == 2, xa - 1, second)
    first = np.maximum(first, 0).astype(np.float64)
    second = np.maximum(second, 0).astype(np.float64)
    return rate[idx] * first * second


def refresh(tree, idx, rate, mode, ia, ib, id_, ie, x) -> None:
    """Recompute the propensities of channels ``idx`` into ``tree``."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return
    tree.set(idx, propensities(idx, rate, mode, ia, ib, id_, ie, x))
