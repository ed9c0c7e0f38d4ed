# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the loops in ``_pykernels``.

Same arithmetic, same accumulation order; see that module for the contracts.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, hypot, log, sqrt, M_PI

cnp.import_array()

cdef double _INV_2PI = 0.5 / M_PI
cdef double _EPS = 1e-9


cdef double _directed_sum(const double[:, ::1] a, const double[:, ::1] b) nogil:
    cdef Py_ssize_t i, j
    cdef double dx, dy, dist, best, total = 0.0
    for i in range(a.shape[0]):
        best = 1.0 / 0.0
        for j in range(b.shape[0]):
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            dist = sqrt(dx * dx + dy * dy)
            if dist < best:
                best = dist
        total += best
    return total


def directed_min_dists(a, b):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty(av.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double dx, dy, dist, best
    with nogil:
        for i in range(av.shape[0]):
            best = 1.0 / 0.0
            for j in range(bv.shape[0]):
                dx = av[i, 0] - bv[j, 0]
                dy = av[i, 1] - bv[j, 1]
                dist = sqrt(dx * dx + dy * dy)
                if dist < best:
                    best = dist
            ov[i] = best
    return out


def chamfer(a, b):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef double s_ab, s_ba
    with nogil:
        s_ab = _directed_sum(av, bv)
        s_ba = _directed_sum(bv, av)
    return s_ab / av.shape[0] + s_ba / bv.shape[0]


def chamfer_one_to_many(a, stack):
    cdef const double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, :, ::1] sv = np.ascontiguousarray(stack, dtype=np.float64)
    out = np.empty(sv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t m
    with nogil:
        for m in range(sv.shape[0]):
            ov[m] = (_directed_sum(av, sv[m]) / av.shape[0]
                     + _directed_sum(sv[m], av) / sv.shape[1])
    return out


def vortex_stream_influence(nodes):
    cdef const double[:, ::1] xv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out = np.zeros((n, n))
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double tx, tz, d, rx, rz, x, z, xd, r1, r2, th1, th2, lr1, lr2, p1, p2
    with nogil:
        for j in range(n - 1):
            tx = xv[j + 1, 0] - xv[j, 0]
            tz = xv[j + 1, 1] - xv[j, 1]
            d = hypot(tx, tz)
            tx = tx / d
            tz = tz / d
            for i in range(n):
                rx = xv[i, 0] - xv[j, 0]
                rz = xv[i, 1] - xv[j, 1]
                x = rx * tx + rz * tz
                z = -rx * tz + rz * tx
                xd = x - d
                r1 = hypot(x, z)
                r2 = hypot(xd, z)
                th1 = atan2(z, x)
                th2 = atan2(z, xd)
                lr1 = 0.0 if r1 < _EPS else log(r1)
                lr2 = 0.0 if r2 < _EPS else log(r2)
                p1 = _INV_2PI * (z * (th2 - th1) - d + x * lr1 - xd * lr2)
                p2 = x * p1 + _INV_2PI * (0.5 * r2 * r2 * lr2 - 0.5 * r1 * r1 * lr1
                                          - 0.25 * r2 * r2 + 0.25 * r1 * r1)
                ov[i, j] += p1 - p2 / d
                ov[i, j + 1] += p2 / d
    return out
