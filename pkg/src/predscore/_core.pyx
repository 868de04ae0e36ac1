# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Semantics mirror predscore._pure exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs, sqrt

cnp.import_array()

NAME = "cython"


cdef inline double _softplus(double eta) noexcept nogil:
    if eta > 0:
        return eta + log1p(exp(-eta))
    return log1p(exp(eta))


cdef inline double _expit(double eta) noexcept nogil:
    cdef double e
    if eta >= 0:
        return 1.0 / (1.0 + exp(-eta))
    e = exp(eta)
    return e / (1.0 + e)


def softplus(eta):
    return np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))


def expit(const double[::1] eta):
    cdef Py_ssize_t i, n = eta.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _expit(eta[i])
    return out


def auc_from_order(const double[::1] scores, const signed char[::1] labels,
                   const cnp.intp_t[::1] order):
    cdef Py_ssize_t n = order.shape[0], i = 0, j
    cdef long long pos_block, neg_block, neg_below = 0, n_pos = 0, twice = 0
    cdef double v
    with nogil:
        while i < n:
            v = scores[order[i]]
            pos_block = 0
            j = i
            while j < n and scores[order[j]] == v:
                pos_block += labels[order[j]]
                j += 1
            neg_block = (j - i) - pos_block
            twice += 2 * pos_block * neg_below + pos_block * neg_block
            neg_below += neg_block
            n_pos += pos_block
            i = j
    return twice / (2.0 * n_pos * (n - n_pos))


def pr_auc_from_order(const double[::1] scores, const signed char[::1] labels,
                      const cnp.intp_t[::1] order):
    cdef Py_ssize_t n = order.shape[0], i = n - 1, j
    cdef long long tp = 0, fp = 0, prev_tp = 0, n_pos = 0
    cdef double v, area = 0.0
    with nogil:
        for j in range(n):
            n_pos += labels[j]
        while i >= 0:
            v = scores[order[i]]
            j = i
            while j >= 0 and scores[order[j]] == v:
                if labels[order[j]]:
                    tp += 1
                else:
                    fp += 1
                j -= 1
            if tp != prev_tp:
                area += <double>(tp - prev_tp) / n_pos * (<double>tp / (tp + fp))
                prev_tp = tp
            i = j
    return area


def ks_sorted(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], i = 0, j = 0
    cdef double v, d, best = 0.0
    with nogil:
        while i < na or j < nb:
            if j >= nb or (i < na and a[i] <= b[j]):
                v = a[i]
            else:
                v = b[j]
            while i < na and a[i] <= v:
                i += 1
            while j < nb and b[j] <= v:
                j += 1
            d = fabs(<double>i / na - <double>j / nb)
            if d > best:
                best = d
    return best


cdef void _row_means(const double[::1] x, double* row, double* grand) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], i, k
    cdef double s, g = 0.0
    for i in range(n):
        s = 0.0
        for k in range(n):
            s += fabs(x[i] - x[k])
        row[i] = s / n
        g += row[i]
    grand[0] = g / n


def dcov_sq(const double[::1] x, const double[::1] y):
    cdef Py_ssize_t n = x.shape[0], i, k
    rx_arr = np.empty(n)
    ry_arr = np.empty(n)
    cdef double[::1] rx = rx_arr
    cdef double[::1] ry = ry_arr
    cdef double gx, gy, acc = 0.0, ax, by
    with nogil:
        _row_means(x, &rx[0], &gx)
        _row_means(y, &ry[0], &gy)
        for i in range(n):
            for k in range(n):
                ax = fabs(x[i] - x[k]) - rx[i] - rx[k] + gx
                by = fabs(y[i] - y[k]) - ry[i] - ry[k] + gy
                acc += ax * by
    return acc / (<double>n * n)


cdef double _loglik(const double[:, ::1] X, const double[::1] y,
                    const double[::1] w, const double* beta,
                    double* eta) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, c
    cdef double e, ll = 0.0
    for i in range(n):
        e = 0.0
        for c in range(p):
            e += X[i, c] * beta[c]
        eta[i] = e
        ll += w[i] * (y[i] * e - _softplus(e))
    return ll


cdef void _grad_info(const double[:, ::1] X, const double[::1] y,
                     const double[::1] w, const double* eta,
                     double* grad, double* info) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, a, b
    cdef double pr, r, v
    for a in range(p):
        grad[a] = 0.0
        for b in range(p):
            info[a * p + b] = 0.0
    for i in range(n):
        pr = _expit(eta[i])
        r = w[i] * (y[i] - pr)
        v = w[i] * pr * (1.0 - pr)
        for a in range(p):
            grad[a] += X[i, a] * r
            for b in range(a + 1):
                info[a * p + b] += X[i, a] * X[i, b] * v
    for a in range(p):
        for b in range(a + 1, p):
            info[a * p + b] = info[b * p + a]


cdef int _chol_solve(const double* A, const double* rhs, double* out,
                     double* L, Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s
    for i in range(p):
        for j in range(i + 1):
            s = A[i * p + j]
            for k in range(j):
                s -= L[i * p + k] * L[j * p + k]
            if i == j:
                if s <= 0.0:
                    return -1
                L[i * p + i] = sqrt(s)
            else:
                L[i * p + j] = s / L[j * p + j]
    for i in range(p):
        s = rhs[i]
        for k in range(i):
            s -= L[i * p + k] * out[k]
        out[i] = s / L[i * p + i]
    for i in range(p - 1, -1, -1):
        s = out[i]
        for k in range(i + 1, p):
            s -= L[k * p + i] * out[k]
        out[i] = s / L[i * p + i]
    return 0


def irls(X_in, y_in, w_in, beta0, int max_iter, double tol, double cap):
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], a, h
    beta_arr = np.array(beta0, dtype=np.float64, copy=True)
    info_arr = np.zeros((p, p))
    cdef double[::1] beta = beta_arr
    cdef double[:, ::1] info = info_arr
    cdef double[::1] cand = np.empty(p)
    cdef double[::1] step = np.empty(p)
    cdef double[::1] grad = np.empty(p)
    cdef double[::1] L = np.zeros(p * p)
    cdef double[::1] eta = np.empty(n)
    cdef double[::1] cand_eta = np.empty(n)
    trace_arr = np.empty(max_iter + 1)
    cdef double[::1] trace = trace_arr
    cdef double total = 0.0, ll, cand_ll, scale, gmax, norm
    cdef int iterations = 0, moved
    cdef bint converged = False, separated = False
    with nogil:
        for a in range(n):
            total += w[a]
        ll = _loglik(X, y, w, &beta[0], &eta[0])
        trace[0] = ll
        while True:
            _grad_info(X, y, w, &eta[0], &grad[0], &info[0, 0])
            gmax = 0.0
            for a in range(p):
                if fabs(grad[a]) > gmax:
                    gmax = fabs(grad[a])
            if gmax / total <= tol:
                converged = True
                break
            if iterations >= max_iter:
                break
            if _chol_solve(&info[0, 0], &grad[0], &step[0], &L[0], p) != 0:
                break
            scale = 1.0
            moved = 0
            for h in range(31):
                for a in range(p):
                    cand[a] = beta[a] + scale * step[a]
                cand_ll = _loglik(X, y, w, &cand[0], &cand_eta[0])
                if cand_ll >= ll:
                    moved = 1
                    break
                scale *= 0.5
            if not moved:
                break
            norm = 0.0
            for a in range(p):
                beta[a] = cand[a]
                norm += cand[a] * cand[a]
            for a in range(n):
                eta[a] = cand_eta[a]
            ll = cand_ll
            iterations += 1
            trace[iterations] = ll
            if sqrt(norm) > cap:
                separated = True
                _grad_info(X, y, w, &eta[0], &grad[0], &info[0, 0])
                break
    return (beta_arr, info_arr, bool(converged), bool(separated), iterations,
            trace_arr[:iterations + 1].copy())
