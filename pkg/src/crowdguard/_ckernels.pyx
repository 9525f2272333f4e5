# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled kernels. Arithmetic order mirrors _pykernels.py so both backends agree bit for bit."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def social_forces(x, y, vx, vy, hx, hy, group, desired_speed, double interaction_range,
                  double avoidance_gain, double avoidance_range, double anticipation,
                  double cohesion_gain, double coherency_gain):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] vxv = np.ascontiguousarray(vx, dtype=np.float64)
    cdef const double[::1] vyv = np.ascontiguousarray(vy, dtype=np.float64)
    cdef const double[::1] hxv = np.ascontiguousarray(hx, dtype=np.float64)
    cdef const double[::1] hyv = np.ascontiguousarray(hy, dtype=np.float64)
    cdef const cnp.int64_t[::1] gv = np.ascontiguousarray(group, dtype=np.int64)
    cdef const double[::1] sv = np.ascontiguousarray(desired_speed, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out_x = np.zeros(n, dtype=np.float64)
    out_y = np.zeros(n, dtype=np.float64)
    cdef double[::1] fx = out_x
    cdef double[::1] fy = out_y
    cdef double r2 = interaction_range * interaction_range
    cdef Py_ssize_t i, j
    cdef double xi, yi, vxi, vyi, ax, ay, cx, cy, sx, sy, dx, dy, d2, d, m, k
    cdef double px, py, ex, ey, e, b2, b
    cdef long cnt, hcnt
    cdef cnp.int64_t gi
    with nogil:
        for i in range(n):
            xi = xv[i]
            yi = yv[i]
            vxi = vxv[i]
            vyi = vyv[i]
            gi = gv[i]
            ax = 0.0
            ay = 0.0
            cx = 0.0
            cy = 0.0
            cnt = 0
            sx = 0.0
            sy = 0.0
            hcnt = 0
            for j in range(n):
                if j == i:
                    continue
                dx = xi - xv[j]
                dy = yi - yv[j]
                d2 = dx * dx + dy * dy
                if d2 > r2:
                    continue
                if d2 > 0.0:
                    d = sqrt(d2)
                    px = (vxv[j] - vxi) * anticipation
                    py = (vyv[j] - vyi) * anticipation
                    ex = dx - px
                    ey = dy - py
                    e = sqrt(ex * ex + ey * ey)
                    b2 = (d + e) * (d + e) - (px * px + py * py)
                    if b2 > 0.0:
                        b = 0.5 * sqrt(b2)
                    else:
                        b = 0.0
                    m = avoidance_gain * exp(-b / avoidance_range) / d
                    ax += dx * m
                    ay += dy * m
                if gi >= 0 and gv[j] == gi:
                    cx += xv[j]
                    cy += yv[j]
                    cnt += 1
                    if hxv[j] != 0.0 or hyv[j] != 0.0:
                        sx += hxv[j]
                        sy += hyv[j]
                        hcnt += 1
            if cnt > 0:
                ax += cohesion_gain * (cx / cnt - xi)
                ay += cohesion_gain * (cy / cnt - yi)
            if hcnt > 0 and (hxv[i] != 0.0 or hyv[i] != 0.0):
                k = coherency_gain * sv[i]
                ax += k * (sx / hcnt - hxv[i])
                ay += k * (sy / hcnt - hyv[i])
            fx[i] = ax
            fy[i] = ay
    return out_x, out_y


def close_pairs(x, y, double radius):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef double r2 = radius * radius
    cdef Py_ssize_t i, j, count = 0
    cdef double xi, yi, dx, dy
    # two passes: count, then fill
    with nogil:
        for i in range(n):
            xi = xv[i]
            yi = yv[i]
            for j in range(i + 1, n):
                dx = xi - xv[j]
                dy = yi - yv[j]
                if dx * dx + dy * dy <= r2:
                    count += 1
    out_i = np.empty(count, dtype=np.int64)
    out_j = np.empty(count, dtype=np.int64)
    cdef cnp.int64_t[::1] oi = out_i
    cdef cnp.int64_t[::1] oj = out_j
    cdef Py_ssize_t k = 0
    with nogil:
        for i in range(n):
            xi = xv[i]
            yi = yv[i]
            for j in range(i + 1, n):
                dx = xi - xv[j]
                dy = yi - yv[j]
                if dx * dx + dy * dy <= r2:
                    oi[k] = i
                    oj[k] = j
                    k += 1
    return out_i, out_j
