"""Exact rank of integer matrices via fraction-free Gaussian elimination.

The fast path runs on int64 with an overflow guard; rows are divided by their
gcd after every elimination step, which keeps entries tiny for the 0/1
indicator matrices this package produces.  If the guard ever trips, the whole
computation restarts with arbitrary-precision Python integers, so the result
is exact in all cases.
"""

from __future__ import annotations

import math

import numpy as np

_INT64_GUARD = 2**31


def exact_rank(mat) -> int:
    """Rank over the rationals of an integer matrix."""
    a = np.asarray(mat)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if a.size == 0:
        return 0
    try:
        return _rank_int64(a.astype(np.int64))
    except OverflowError:
        return _rank_bigint(a)


def _rank_int64(a: np.ndarray) -> int:
    a = a.copy()
    m, ncols = a.shape
    rank = 0
    for col in range(ncols):
        if rank == m:
            break
        sub = a[rank:, col]
        nz = np.nonzero(sub)[0]
        if nz.size == 0:
            continue
        piv_row = int(nz[np.argmin(np.abs(sub[nz]))]) + rank
        if piv_row != rank:
            a[[rank, piv_row]] = a[[piv_row, rank]]
        piv = int(a[rank, col])
        below = np.nonzero(a[rank + 1 :, col])[0] + rank + 1
        if below.size:
            if abs(piv) >= _INT64_GUARD or np.abs(a[below]).max() >= _INT64_GUARD:
                raise OverflowError
            a[below] = a[below] * piv - np.outer(a[below, col], a[rank])
            g = np.gcd.reduce(np.abs(a[below]), axis=1)
            g[g == 0] = 1
            a[below] //= g[:, None]
        rank += 1
    return rank


def _rank_bigint(mat: np.ndarray) -> int:
    rows = [[int(v) for v in row] for row in mat]
    ncols = len(rows[0])
    rank = 0
    for col in range(ncols):
        piv_idx = None
        for i in range(rank, len(rows)):
            if rows[i][col] != 0 and (piv_idx is None or abs(rows[i][col]) < abs(rows[piv_idx][col])):
                piv_idx = i
        if piv_idx is None:
            continue
        rows[rank], rows[piv_idx] = rows[piv_idx], rows[rank]
        piv_row, piv = rows[rank], rows[rank][col]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f == 0:
                continue
            new = [piv * x - f * y for x, y in zip(rows[i], piv_row)]
            g = 0
            for v in new:
                g = math.gcd(g, v)
            rows[i] = [v // g for v in new] if g > 1 else new
        rank += 1
        if rank == len(rows):
            break
    return rank
