# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray-casting kernels; same contract as ``bwp._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs, fmin, fmax

cnp.import_array()


cdef inline bint _hit(double ox, double oy, double dx, double dy, double lim,
                      const double[:, ::1] walls, Py_ssize_t k, double tol,
                      double* t0, double* t1) noexcept nogil:
    cdef double ax = walls[k, 0] - ox
    cdef double ay = walls[k, 1] - oy
    cdef double bx = walls[k, 2] - ox
    cdef double by = walls[k, 3] - oy
    cdef double da = dx * ay - dy * ax
    cdef double db = dx * by - dy * bx
    cdef double u, t, ta, tb, lo, hi, c0, c1
    if fabs(da) <= tol and fabs(db) <= tol:
        ta = dx * ax + dy * ay
        tb = dx * bx + dy * by
        lo = fmin(ta, tb)
        hi = fmax(ta, tb)
        c0 = fmax(lo, tol)
        c1 = fmin(hi, lim - tol)
        if c1 < c0 - tol or c0 >= lim - tol or hi <= tol:
            return False
        t0[0] = c0
        t1[0] = fmax(c0, c1)
        return True
    if (da > tol and db > tol) or (da < -tol and db < -tol):
        return False
    u = da / (da - db)
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    t = dx * (ax + u * (bx - ax)) + dy * (ay + u * (by - ay))
    if t > tol and t < lim - tol:
        t0[0] = t
        t1[0] = t
        return True
    return False


def first_hits(double ox, double oy, dirs, limits, walls, double tol):
    cdef const double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    cdef const double[::1] lim = np.ascontiguousarray(
        np.broadcast_to(np.asarray(limits, dtype=np.float64), (n,)))
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 5)
    cdef Py_ssize_t nw = w.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, k
    cdef double best, t0, t1
    with nogil:
        for i in range(n):
            best = INFINITY
            for k in range(nw):
                if _hit(ox, oy, d[i, 0], d[i, 1], lim[i], w, k, tol, &t0, &t1):
                    if t0 < best:
                        best = t0
            out[i] = best
    return out_arr


def all_hits(double ox, double oy, dirs, limits, walls, double tol):
    cdef const double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0]
    cdef const double[::1] lim = np.ascontiguousarray(
        np.broadcast_to(np.asarray(limits, dtype=np.float64), (n,)))
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 5)
    cdef Py_ssize_t nw = w.shape[0]
    t_arr = np.full((n, nw), np.inf)
    a_arr = np.zeros((n, nw))
    cdef double[:, ::1] t_out = t_arr
    cdef double[:, ::1] a_out = a_arr
    s0_arr = np.empty(max(nw, 1))
    s1_arr = np.empty(max(nw, 1))
    sa_arr = np.empty(max(nw, 1))
    cdef double[::1] s0 = s0_arr
    cdef double[::1] s1 = s1_arr
    cdef double[::1] sa = sa_arr
    cdef Py_ssize_t i, k, m, j, g
    cdef double t0, t1, v0, v1, va, end
    with nogil:
        for i in range(n):
            m = 0
            for k in range(nw):
                if _hit(ox, oy, d[i, 0], d[i, 1], lim[i], w, k, tol, &t0, &t1):
                    # insertion sort on start distance; ties keep wall order
                    j = m
                    while j > 0 and s0[j - 1] > t0:
                        s0[j] = s0[j - 1]
                        s1[j] = s1[j - 1]
                        sa[j] = sa[j - 1]
                        j -= 1
                    s0[j] = t0
                    s1[j] = t1
                    sa[j] = w[k, 4]
                    m += 1
            if m == 0:
                continue
            g = 0
            t_out[i, 0] = s0[0]
            a_out[i, 0] = sa[0]
            end = s1[0]
            for j in range(1, m):
                if s0[j] <= end + tol:
                    if sa[j] > a_out[i, g]:
                        a_out[i, g] = sa[j]
                    if s1[j] > end:
                        end = s1[j]
                else:
                    g += 1
                    t_out[i, g] = s0[j]
                    a_out[i, g] = sa[j]
                    end = s1[j]
    return t_arr, a_arr
