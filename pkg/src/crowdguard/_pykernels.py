"""Pure-Python kernels. Must stay operation-for-operation identical to _ckernels.pyx."""

from __future__ import annotations

from math import exp, sqrt

import numpy as np


def social_forces(x, y, vx, vy, hx, hy, group, desired_speed, interaction_range,
                  avoidance_gain, avoidance_range, anticipation, cohesion_gain, coherency_gain):
    x = np.asarray(x, dtype=np.float64).tolist()
    y = np.asarray(y, dtype=np.float64).tolist()
    vx = np.asarray(vx, dtype=np.float64).tolist()
    vy = np.asarray(vy, dtype=np.float64).tolist()
    hx = np.asarray(hx, dtype=np.float64).tolist()
    hy = np.asarray(hy, dtype=np.float64).tolist()
    group = np.asarray(group, dtype=np.int64).tolist()
    desired_speed = np.asarray(desired_speed, dtype=np.float64).tolist()
    n = len(x)
    fx = [0.0] * n
    fy = [0.0] * n
    r2 = interaction_range * interaction_range
    for i in range(n):
        xi = x[i]
        yi = y[i]
        vxi = vx[i]
        vyi = vy[i]
        gi = group[i]
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
            dx = xi - x[j]
            dy = yi - y[j]
            d2 = dx * dx + dy * dy
            if d2 > r2:
                continue
            if d2 > 0.0:
                d = sqrt(d2)
                # semi-minor axis of the ellipse spanned by the current and
                # the anticipated separation
                px = (vx[j] - vxi) * anticipation
                py = (vy[j] - vyi) * anticipation
                ex = dx - px
                ey = dy - py
                e = sqrt(ex * ex + ey * ey)
                b2 = (d + e) * (d + e) - (px * px + py * py)
                b = 0.5 * sqrt(b2) if b2 > 0.0 else 0.0
                m = avoidance_gain * exp(-b / avoidance_range) / d
                ax += dx * m
                ay += dy * m
            if gi >= 0 and group[j] == gi:
                cx += x[j]
                cy += y[j]
                cnt += 1
                if hx[j] != 0.0 or hy[j] != 0.0:
                    sx += hx[j]
                    sy += hy[j]
                    hcnt += 1
        if cnt > 0:
            ax += cohesion_gain * (cx / cnt - xi)
            ay += cohesion_gain * (cy / cnt - yi)
        if hcnt > 0 and (hx[i] != 0.0 or hy[i] != 0.0):
            k = coherency_gain * desired_speed[i]
            ax += k * (sx / hcnt - hx[i])
            ay += k * (sy / hcnt - hy[i])
        fx[i] = ax
        fy[i] = ay
    return np.array(fx, dtype=np.float64), np.array(fy, dtype=np.float64)


def close_pairs(x, y, radius):
    x = np.asarray(x, dtype=np.float64).tolist()
    y = np.asarray(y, dtype=np.float64).tolist()
    n = len(x)
    r2 = radius * radius
    ii = []
    jj = []
    for i in range(n):
        xi = x[i]
        yi = y[i]
        for j in range(i + 1, n):
            dx = xi - x[j]
            dy = yi - y[j]
            if dx * dx + dy * dy <= r2:
                ii.append(i)
                jj.append(j)
    return np.array(ii, dtype=np.int64), np.array(jj, dtype=np.int64)
