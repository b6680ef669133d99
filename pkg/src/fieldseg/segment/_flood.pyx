# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled seeded flood kernel.

Mirrors flood_py.flood exactly: pop the unlabeled frontier pixel with the
smallest (boundary probability, row-major index) key; label it from its
smallest-key labeled 4-neighbor. Keys are packed into uint64 (float32 bit
pattern in the high half), which preserves ordering for probabilities in
[0, 1].
"""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport free, malloc, realloc

ctypedef cnp.uint64_t u64

cdef struct Heap:
    u64* data
    Py_ssize_t size
    Py_ssize_t cap

cdef inline int heap_push(Heap* h, u64 key) except -1:
    cdef Py_ssize_t i, parent
    if h.size == h.cap:
        h.cap *= 2
        h.data = <u64*>realloc(h.data, h.cap * sizeof(u64))
        if h.data == NULL:
            raise MemoryError()
    i = h.size
    h.size += 1
    h.data[i] = key
    while i > 0:
        parent = (i - 1) >> 1
        if h.data[parent] <= h.data[i]:
            break
        h.data[parent], h.data[i] = h.data[i], h.data[parent]
        i = parent
    return 0

cdef inline u64 heap_pop(Heap* h):
    cdef u64 top = h.data[0]
    cdef Py_ssize_t i = 0, child
    h.size -= 1
    h.data[0] = h.data[h.size]
    while True:
        child = 2 * i + 1
        if child >= h.size:
            break
        if child + 1 < h.size and h.data[child + 1] < h.data[child]:
            child += 1
        if h.data[i] <= h.data[child]:
            break
        h.data[i], h.data[child] = h.data[child], h.data[i]
        i = child
    return top


def flood(cnp.ndarray[cnp.float32_t, ndim=2] p_bnd,
          cnp.ndarray[cnp.uint8_t, ndim=2, cast=True] mask,
          cnp.ndarray[cnp.int32_t, ndim=2] labels):
    """Expand seed labels over the mask. ``labels`` is modified in place."""
    cdef Py_ssize_t h = p_bnd.shape[0]
    cdef Py_ssize_t w = p_bnd.shape[1]
    cdef Py_ssize_t n = h * w
    cdef const cnp.uint8_t[::1] msk = np.ascontiguousarray(mask).view(np.uint8).ravel()
    cdef cnp.int32_t[::1] lab = labels.ravel()
    cdef const cnp.uint32_t[::1] bits = np.ascontiguousarray(p_bnd).ravel().view(np.uint32)

    cdef Heap heap
    heap.size = 0
    heap.cap = 4096
    heap.data = <u64*>malloc(heap.cap * sizeof(u64))
    if heap.data == NULL:
        raise MemoryError()

    cdef Py_ssize_t i, j, k, r, c
    cdef Py_ssize_t nbr[4]
    cdef int n_nbr
    cdef u64 key, best_key
    cdef cnp.int32_t best_lab

    try:
        for i in range(n):
            if lab[i] <= 0:
                continue
            r = i // w
            c = i - r * w
            n_nbr = 0
            if r > 0: nbr[n_nbr] = i - w; n_nbr += 1
            if r < h - 1: nbr[n_nbr] = i + w; n_nbr += 1
            if c > 0: nbr[n_nbr] = i - 1; n_nbr += 1
            if c < w - 1: nbr[n_nbr] = i + 1; n_nbr += 1
            for k in range(n_nbr):
                j = nbr[k]
                if msk[j] and lab[j] == 0:
                    heap_push(&heap, (<u64>bits[j] << 32) | <u64>j)

        while heap.size > 0:
            key = heap_pop(&heap)
            i = <Py_ssize_t>(key & 0xFFFFFFFFu)
            if lab[i] != 0:
                continue
            r = i // w
            c = i - r * w
            n_nbr = 0
            if r > 0: nbr[n_nbr] = i - w; n_nbr += 1
            if r < h - 1: nbr[n_nbr] = i + w; n_nbr += 1
            if c > 0: nbr[n_nbr] = i - 1; n_nbr += 1
            if c < w - 1: nbr[n_nbr] = i + 1; n_nbr += 1
            best_lab = 0
            best_key = 0
            for k in range(n_nbr):
                j = nbr[k]
                if lab[j] > 0:
                    key = (<u64>bits[j] << 32) | <u64>j
                    if best_lab == 0 or key < best_key:
                        best_key = key
                        best_lab = lab[j]
            if best_lab == 0:
                continue
            lab[i] = best_lab
            for k in range(n_nbr):
                j = nbr[k]
                if msk[j] and lab[j] == 0:
                    heap_push(&heap, (<u64>bits[j] << 32) | <u64>j)
    finally:
        free(heap.data)
    return labels
