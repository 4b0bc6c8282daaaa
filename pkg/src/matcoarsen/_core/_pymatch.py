"""Numpy implementation of the column-matching sweep.

Used when the compiled kernel is unavailable. Accumulation order matches
``_cmatch.pyx`` term for term, so both backends return bit-identical
results.
"""
import numpy as np


def match_columns(col_ptr, col_idx, col_val, row_ptr, row_idx, row_val,
                  order, norms2, col_nnz, threshold, early_exit=False):
    """Greedy pairwise matching of columns by inner product.

    Parameters
    ----------
    col_ptr, col_idx, col_val : ndarray
        CSC arrays of the matrix (sorted row indices per column).
    row_ptr, row_idx, row_val : ndarray
        CSR arrays of the same matrix.
    order : ndarray of int64
        Visiting order of the columns (a permutation of ``0..n-1``).
    norms2 : ndarray
        Squared column norms.
    col_nnz : ndarray
        Nonzeros per column, used to pick the denser column of a pair.
    threshold : float
        Minimum squared cosine for a match.
    early_exit : bool
        Take the first acceptable candidate (ascending index) instead of
        the largest inner product.

    Returns
    -------
    kept, partner, cos2 : ndarray
        One entry per coarse column, in creation order. ``partner`` is -1
        and ``cos2`` is NaN for unmatched columns.
    """
    n = order.shape[0]
    matched = np.zeros(n, dtype=bool)
    kept = np.empty(n, dtype=np.int64)
    partner = np.full(n, -1, dtype=np.int64)
    cos2 = np.full(n, np.nan)
    ell = 0
    for i in order.tolist():
        if matched[i]:
            continue
        matched[i] = True
        lo, hi = col_ptr[i], col_ptr[i + 1]
        best = -1
        best_cs = 0.0
        if hi > lo:
            rows = col_idx[lo:hi]
            starts = row_ptr[rows]
            lens = row_ptr[rows + 1] - starts
            total = int(lens.sum())
            # flat positions of every (row j, column k) entry visited by loop (*)
            offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(total)
            prods = np.repeat(col_val[lo:hi], lens) * row_val[offs]
            keys, inv = np.unique(row_idx[offs], return_inverse=True)
            ip = np.bincount(inv.ravel(), weights=prods, minlength=keys.size)
            ok = (~matched[keys]) & (ip > 0.0)
            if ok.any():
                cand = keys[ok]
                cip = ip[ok]
                if early_exit:
                    cs = (cip * cip) / (norms2[i] * norms2[cand])
                    hit = np.flatnonzero(cs >= threshold)
                    if hit.size:
                        best = int(cand[hit[0]])
                        best_cs = float(cs[hit[0]])
                else:
                    a = int(np.argmax(cip))  # first maximum == smallest index
                    k = int(cand[a])
                    cs = (cip[a] * cip[a]) / (norms2[i] * norms2[k])
                    if cs >= threshold:
                        best = k
                        best_cs = float(cs)
        if best >= 0:
            matched[best] = True
            if col_nnz[best] > col_nnz[i]:
                kept[ell], partner[ell] = best, i
            else:
                kept[ell], partner[ell] = i, best
            cos2[ell] = best_cs
        else:
            kept[ell] = i
        ell += 1
    return kept[:ell].copy(), partner[:ell].copy(), cos2[:ell].copy()
