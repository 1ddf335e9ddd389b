# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``; results are bit-identical."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

NAME = "cython"


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def splitmix64(z):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] arr = np.ascontiguousarray(
        np.atleast_1d(z), dtype=np.uint64).ravel().copy()
    cdef Py_ssize_t i, n = arr.shape[0]
    for i in range(n):
        arr[i] = _mix(arr[i])
    return arr.reshape(np.shape(z))


def draw_pairs(th, hc, seed_key, threshold):
    cdef const uint64_t[::1] t = np.ascontiguousarray(th, dtype=np.uint64)
    cdef const uint64_t[::1] c = np.ascontiguousarray(hc, dtype=np.uint64)
    cdef Py_ssize_t nt = t.shape[0], nc = c.shape[0], i, j, k = 0, cap
    if nt == 0 or nc == 0 or threshold <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    cdef uint64_t skey = <uint64_t>seed_key
    cdef uint64_t thr = <uint64_t>threshold
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] ck = np.empty(nc, dtype=np.uint64)
    for j in range(nc):
        ck[j] = _mix(c[j] ^ skey)
    cap = 64
    cdef cnp.ndarray[cnp.int64_t, ndim=1] oti = np.empty(cap, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] oci = np.empty(cap, dtype=np.int64)
    cdef uint64_t h
    for i in range(nt):
        for j in range(nc):
            h = _mix(t[i] ^ ck[j])
            if (h >> 11) < thr:
                if k == cap:
                    cap *= 2
                    oti = np.resize(oti, cap)
                    oci = np.resize(oci, cap)
                oti[k] = i
                oci[k] = j
                k += 1
    return oti[:k].copy(), oci[:k].copy()


cdef class SumTree:
    cdef public Py_ssize_t capacity
    cdef public object tree
    cdef double[::1] _t

    def __init__(self, Py_ssize_t capacity=16):
        cdef Py_ssize_t cap = 1
        while cap < max(capacity, 2):
            cap <<= 1
        self.capacity = cap
        self.tree = np.zeros(2 * cap, dtype=np.float64)
        self._t = self.tree

    @property
    def total(self):
        return self._t[1]

    def get(self, Py_ssize_t i):
        return self._t[self.capacity + i]

    def leaves(self, Py_ssize_t n):
        return self.tree[self.capacity:self.capacity + n].copy()

    def grow(self, Py_ssize_t min_capacity):
        if min_capacity <= self.capacity:
            return
        cdef Py_ssize_t cap = self.capacity
        while cap < min_capacity:
            cap <<= 1
        old = self.tree[self.capacity:2 * self.capacity]
        self.capacity = cap
        self.tree = np.zeros(2 * cap, dtype=np.float64)
        self._t = self.tree
        self.tree[cap:cap + old.shape[0]] = old
        self._rebuild()

    cdef void _rebuild(self) noexcept:
        cdef Py_ssize_t k
        for k in range(self.capacity - 1, 0, -1):
            self._t[k] = self._t[2 * k] + self._t[2 * k + 1]

    cdef inline void _set(self, Py_ssize_t i, double v) noexcept:
        cdef Py_ssize_t k = self.capacity + i
        self._t[k] = v
        k >>= 1
        while k:
            self._t[k] = self._t[2 * k] + self._t[2 * k + 1]
            k >>= 1

    def set1(self, Py_ssize_t i, double value):
        self._set(i, value)

    def set(self, idx, values):
        cdef const int64_t[::1] ii = np.ascontiguousarray(idx, dtype=np.int64)
        cdef const double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
        cdef Py_ssize_t n
        for n in range(ii.shape[0]):
            self._set(ii[n], vv[n])

    def select(self, double target):
        cdef Py_ssize_t k = 1, cap = self.capacity
        cdef double left
        while k < cap:
            left = self._t[2 * k]
            if target < left or self._t[2 * k + 1] <= 0.0:
                k = 2 * k
            else:
                target -= left
                k = 2 * k + 1
        return k - cap


cdef inline double _prop(Py_ssize_t j, const double[::1] rate, const signed char[::1] mode,
                         const int64_t[::1] ia, const int64_t[::1] ib,
                         const int64_t[::1] id_, const int64_t[::1] ie,
                         const int64_t[::1] x) noexcept nogil:
    cdef int m = mode[j]
    cdef int64_t xa = x[ia[j]], xb = 0, xd = 0, xe = 0, first, second = 1
    if ib[j] >= 0:
        xb = x[ib[j]]
    if id_[j] >= 0:
        xd = x[id_[j]]
    if ie[j] >= 0:
        xe = x[ie[j]]
    first = xa
    if m == 3:
        first = xa - xd
    elif m == 4:
        first = xa * xb + xd * xe
    elif m == 5:
        first = xa + xd
    if m == 1 or m == 3:
        second = xb
    elif m == 2:
        second = xa - 1
    if first < 0:
        first = 0
    if second < 0:
        second = 0
    return rate[j] * <double>first * <double>second


def propensities(idx, rate, mode, ia, ib, id_, ie, x):
    cdef const int64_t[::1] ii = np.ascontiguousarray(idx, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(ii.shape[0], dtype=np.float64)
    cdef Py_ssize_t n
    for n in range(ii.shape[0]):
        out[n] = _prop(ii[n], rate, mode, ia, ib, id_, ie, x)
    return out


def refresh(SumTree tree, idx, const double[::1] rate, const signed char[::1] mode,
            const int64_t[::1] ia, const int64_t[::1] ib, const int64_t[::1] id_,
            const int64_t[::1] ie, const int64_t[::1] x):
    cdef const int64_t[::1] ii = np.ascontiguousarray(idx, dtype=np.int64)
    cdef Py_ssize_t n, j
    for n in range(ii.shape[0]):
        j = ii[n]
        tree._set(j, _prop(j, rate, mode, ia, ib, id_, ie, x))
