# cython: language_level=3
"""Compiled column-matching sweep (see ``_pymatch`` for the contract)."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport qsort
from libc.math cimport NAN

cnp.import_array()

ctypedef cnp.int64_t i64


cdef int _cmp_i64(const void* a, const void* b) noexcept nogil:
    cdef i64 x = (<i64*>a)[0]
    cdef i64 y = (<i64*>b)[0]
    return (x > y) - (x < y)


def match_columns(const i64[::1] col_ptr, const i64[::1] col_idx, const double[::1] col_val,
                  const i64[::1] row_ptr, const i64[::1] row_idx, const double[::1] row_val,
                  const i64[::1] order, const double[::1] norms2, const i64[::1] col_nnz,
                  double threshold, bint early_exit=False):
    cdef Py_ssize_t n = order.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] matched_a = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ip_a = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] seen_a = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[i64, ndim=1] touched_a = np.empty(max(n, 1), dtype=np.int64)
    kept_a = np.empty(n, dtype=np.int64)
    partner_a = np.full(n, -1, dtype=np.int64)
    cos2_a = np.full(n, np.nan)
    cdef cnp.uint8_t[::1] matched = matched_a
    cdef cnp.uint8_t[::1] seen = seen_a
    cdef double[::1] ip = ip_a
    cdef i64[::1] touched = touched_a
    cdef i64[::1] kept = kept_a
    cdef i64[::1] partner = partner_a
    cdef double[::1] cos2 = cos2_a

    cdef Py_ssize_t t, p, q, nt, ell = 0
    cdef i64 i, j, k, best
    cdef double aji, v, best_ip, best_cs, cs

    with nogil:
        for t in range(n):
            i = order[t]
            if matched[i]:
                continue
            matched[i] = 1
            nt = 0
            # loop (*): row i of A^T A as a combination of sparse rows
            for p in range(col_ptr[i], col_ptr[i + 1]):
                j = col_idx[p]
                aji = col_val[p]
                for q in range(row_ptr[j], row_ptr[j + 1]):
                    k = row_idx[q]
                    if not seen[k]:
                        seen[k] = 1
                        touched[nt] = k
                        nt += 1
                    ip[k] += aji * row_val[q]
            best = -1
            best_cs = 0.0
            if early_exit:
                qsort(&touched[0], nt, sizeof(i64), _cmp_i64)
                for p in range(nt):
                    k = touched[p]
                    v = ip[k]
                    if matched[k] or not (v > 0.0):
                        continue
                    cs = (v * v) / (norms2[i] * norms2[k])
                    if cs >= threshold:
                        best = k
                        best_cs = cs
                        break
            else:
                best_ip = 0.0
                for p in range(nt):
                    k = touched[p]
                    v = ip[k]
                    if matched[k] or not (v > 0.0):
                        continue
                    if v > best_ip or (v == best_ip and k < best):
                        best_ip = v
                        best = k
                if best >= 0:
                    cs = (best_ip * best_ip) / (norms2[i] * norms2[best])
                    if cs >= threshold:
                        best_cs = cs
                    else:
                        best = -1
            if best >= 0:
                matched[best] = 1
                if col_nnz[best] > col_nnz[i]:
                    kept[ell] = best
                    partner[ell] = i
                else:
                    kept[ell] = i
                    partner[ell] = best
                cos2[ell] = best_cs
            else:
                kept[ell] = i
            ell += 1
            # sparse reset: only the entries that were touched
            for p in range(nt):
                k = touched[p]
                ip[k] = 0.0
                seen[k] = 0
    return kept_a[:ell].copy(), partner_a[:ell].copy(), cos2_a[:ell].copy()
