# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled integer kernels.

All arithmetic is on int64 with explicit overflow detection; on overflow the
kernel raises OverflowError and the dispatcher reruns the call on the exact
pure-Python path.
"""

import numpy as np
from libc.stdint cimport int64_t

cdef extern from *:
    """
    static inline int ck_mul(long long a, long long b, long long *r) {
        return __builtin_mul_overflow(a, b, r);
    }
    static inline int ck_add(long long a, long long b, long long *r) {
        return __builtin_add_overflow(a, b, r);
    }
    """
    int ck_mul(long long a, long long b, long long *r) nogil
    int ck_add(long long a, long long b, long long *r) nogil


def orbit_labels(const int64_t[::1] perm):
    cdef Py_ssize_t n = perm.shape[0]
    cdef Py_ssize_t i
    cdef int64_t j
    labels = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] lab = labels
    cdef int bad = 0
    with nogil:
        for i in range(n):
            if lab[i] >= 0:
                continue
            j = i
            while lab[j] < 0:
                lab[j] = i
                j = perm[j]
                if j < 0 or j >= n:
                    bad = 1
                    break
            if bad:
                break
            if j != i:
                bad = 1
                break
    if bad:
        raise ValueError("orbit_labels: input is not a permutation")
    return labels


def tensor_cell_sums(const int64_t[:, ::1] coords, const int64_t[::1] weights,
                     const int64_t[::1] labels, Py_ssize_t ncells,
                     const int64_t[::1] values):
    cdef Py_ssize_t N = coords.shape[0]
    cdef Py_ssize_t m = coords.shape[1]
    cdef Py_ssize_t e, j
    cdef long long acc, prod
    out = np.zeros(ncells, dtype=np.int64)
    cdef int64_t[::1] sums = out
    cdef int ovf = 0
    with nogil:
        for e in range(N):
            prod = weights[e]
            for j in range(m):
                if prod == 0:
                    break
                if ck_mul(prod, values[coords[e, j]], &prod):
                    ovf = 1
                    break
            if ovf:
                break
            if ck_add(sums[labels[e]], prod, &acc):
                ovf = 1
                break
            sums[labels[e]] = acc
    if ovf:
        raise OverflowError("tensor_cell_sums: int64 overflow")
    return out


cdef inline int _advance(int64_t *r, const int64_t[::1] lengths, Py_ssize_t d) nogil:
    cdef Py_ssize_t i = d - 1
    while i >= 0:
        r[i] += 1
        if r[i] < lengths[i]:
            return 1
        r[i] = 0
        i -= 1
    return 0


def cube_sums(const int64_t[:, :, ::1] tables, const int64_t[::1] lengths,
              const int64_t[:, ::1] mults, const int64_t[::1] masks,
              const int64_t[:, ::1] values):
    cdef Py_ssize_t d = tables.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    cdef Py_ssize_t k = masks.shape[0]
    cdef Py_ssize_t x, q, i
    cdef int64_t y
    cdef long long m, prod, acc
    out = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] sums = out
    r_arr = np.zeros(d, dtype=np.int64)
    cdef int64_t[::1] r = r_arr
    cdef int ovf = 0
    cdef int more = 1
    with nogil:
        while more:
            m = 1
            for i in range(d):
                if ck_mul(m, mults[i, r[i]], &m):
                    ovf = 1
                    break
            if ovf:
                break
            if m != 0:
                for x in range(n):
                    prod = m
                    for q in range(k):
                        y = x
                        i = d - 1
                        while i >= 0:
                            if (masks[q] >> i) & 1:
                                y = tables[i, r[i], y]
                            i -= 1
                        if ck_mul(prod, values[q, y], &prod):
                            ovf = 1
                            break
                        if prod == 0:
                            break
                    if ovf:
                        break
                    if ck_add(sums[x], prod, &acc):
                        ovf = 1
                        break
                    sums[x] = acc
                if ovf:
                    break
            more = _advance(&r[0], lengths, d)
    if ovf:
        raise OverflowError("cube_sums: int64 overflow")
    return out


def residue_integrals(const int64_t[:, :, ::1] tables, const int64_t[::1] lengths,
                      const int64_t[::1] masks, const int64_t[:, ::1] values,
                      const int64_t[::1] point_weights):
    cdef Py_ssize_t d = tables.shape[0]
    cdef Py_ssize_t n = values.shape[1]
    cdef Py_ssize_t k = masks.shape[0]
    cdef Py_ssize_t total = 1
    cdef Py_ssize_t x, q, i, pos = 0
    cdef int64_t y
    cdef long long prod, acc
    for i in range(d):
        total *= lengths[i]
    out = np.zeros(total, dtype=np.int64)
    cdef int64_t[::1] res = out
    r_arr = np.zeros(d, dtype=np.int64)
    cdef int64_t[::1] r = r_arr
    cdef int ovf = 0
    cdef int more = 1
    with nogil:
        while more:
            acc = 0
            for x in range(n):
                prod = point_weights[x]
                for q in range(k):
                    y = x
                    i = d - 1
                    while i >= 0:
                        if (masks[q] >> i) & 1:
                            y = tables[i, r[i], y]
                        i -= 1
                    if ck_mul(prod, values[q, y], &prod):
                        ovf = 1
                        break
                    if prod == 0:
                        break
                if ovf:
                    break
                if ck_add(acc, prod, &acc):
                    ovf = 1
                    break
            if ovf:
                break
            res[pos] = acc
            pos += 1
            more = _advance(&r[0], lengths, d)
    if ovf:
        raise OverflowError("residue_integrals: int64 overflow")
    return out
