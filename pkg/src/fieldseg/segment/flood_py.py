"""Pure-Python seeded flood kernel (fallback when the C extension is absent).

Semantics shared with the compiled kernel: among all unlabeled mask pixels
4-adjacent to a labeled pixel, repeatedly take the one with the smallest
(boundary probability, row-major index) key and give it the label of its
smallest-key labeled neighbor. This grows basins along paths that minimize
the maximum boundary probability (min-max criterion) with deterministic
tie-breaking.
"""

from __future__ import annotations

import heapq

import numpy as np


def flood(p_bnd: np.ndarray, mask: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Expand seed labels over the mask. ``labels`` is modified in place."""
    h, w = p_bnd.shape
    bnd = p_bnd.ravel()
    msk = mask.ravel()
    lab = labels.ravel()

    def neighbors(i):
        r, c = divmod(i, w)
        if r > 0:
            yield i - w
        if r < h - 1:
            yield i + w
        if c > 0:
            yield i - 1
        if c < w - 1:
            yield i + 1

    heap = []
    seed_idx = np.flatnonzero(lab > 0)
    for i in seed_idx:
        for j in neighbors(i):
            if msk[j] and lab[j] == 0:
                heapq.heappush(heap, (bnd[j], j))

    while heap:
        _, i = heapq.heappop(heap)
        if lab[i] != 0:
            continue
        best = None
        for j in neighbors(i):
            if lab[j] > 0 and (best is None or (bnd[j], j) < best[:2]):
                best = (bnd[j], j, lab[j])
        if best is None:
            continue
        lab[i] = best[2]
        for j in neighbors(i):
            if msk[j] and lab[j] == 0:
                heapq.heappush(heap, (bnd[j], j))
    return labels
