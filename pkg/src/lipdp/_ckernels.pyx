# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; ``_fallback.py`` holds the reference numpy versions."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t MASK64 = 0xFFFFFFFFFFFFFFFFULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def keyed_uniforms(seeds, node, state, draw):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] s = np.ascontiguousarray(seeds, dtype=np.uint64)
    cdef Py_ssize_t r = s.shape[0], i
    cdef uint64_t kn = <uint64_t>((node + 2 * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ks = <uint64_t>((state + 3 * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t kd = <uint64_t>((draw + 4 * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(r, dtype=np.float64)
    cdef uint64_t h
    with nogil:
        for i in range(r):
            h = mix64(s[i] + GAMMA)
            h = mix64(h ^ kn)
            h = mix64(h ^ ks)
            h = mix64(h ^ kd)
            out[i] = <double>(h >> 11) * (1.0 / 9007199254740992.0)
    return out


def gibbs_pick(values, cs, us, double sign, double ref):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c = np.ascontiguousarray(cs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] u = np.ascontiguousarray(us, dtype=np.float64)
    cdef Py_ssize_t p = x.shape[0], r = c.shape[0], i, j, last_pos, idx
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(r, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wts = np.empty(p, dtype=np.float64)
    cdef double total, target, acc
    with nogil:
        for i in range(r):
            total = 0.0
            last_pos = 0
            for j in range(p):
                wts[j] = exp(sign * c[i] * (x[j] - ref))
                total = total + wts[j]
                if wts[j] > 0.0:
                    last_pos = j
            target = u[i] * total
            acc = 0.0
            idx = p
            for j in range(p):
                acc = acc + wts[j]
                if acc > target:
                    idx = j
                    break
            if idx > last_pos:
                idx = last_pos
            out[i] = idx
    return out


def brute_force(int kind, int n, masks_a, masks_b, weights):
    cdef cnp.ndarray[cnp.int64_t, ndim=1] a = np.ascontiguousarray(masks_a, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] b = np.ascontiguousarray(
        masks_a if masks_b is None else masks_b, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef int64_t total = (<int64_t>1) << n
    cdef int64_t mask, best_mask = 0
    cdef int v, j, m = a.shape[0]
    cdef bint ok, found = False
    cdef bint maximize = kind == 0 or kind == 3
    cdef double val, best_val = 0.0
    if kind < 0 or kind > 3:
        raise ValueError(f"unknown kind {kind}")
    with nogil:
        for mask in range(total):
            ok = True
            if kind == 0:
                for v in range(n):
                    if (mask >> v) & 1 and (mask & a[v]) != 0:
                        ok = False
                        break
            elif kind == 1:
                for v in range(n):
                    if not ((mask >> v) & 1) and (mask & a[v]) != a[v]:
                        ok = False
                        break
            elif kind == 2:
                for v in range(n):
                    if (mask & a[v]) == 0:
                        ok = False
                        break
            else:
                for j in range(m):
                    if (mask & a[j]) == 0 and ((~mask) & b[j]) == 0:
                        ok = False
                        break
            if not ok:
                continue
            val = 0.0
            for v in range(n):
                if (mask >> v) & 1:
                    val = val + w[v]
            if not found or (maximize and val > best_val) or (not maximize and val < best_val):
                best_val = val
                best_mask = mask
                found = True
    return best_val, int(best_mask), bool(found)
