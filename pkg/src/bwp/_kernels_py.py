"""Vectorized numpy ray-casting kernels (fallback for the compiled module).

Both functions cast unit rays from one origin against every wall.  ``limits``
caps each ray; hits must lie strictly inside ``(tol, limit - tol)``.
"""
import numpy as np

_CHUNK = 1 << 15


def _raw_hits(ox, oy, dirs, limits, walls, tol):
    dx = dirs[:, :1]
    dy = dirs[:, 1:2]
    lim = limits[:, None]
    ax, ay, bx, by = (walls[:, i][None, :] for i in range(4))
    rax, ray_, rbx, rby = ax - ox, ay - oy, bx - ox, by - oy
    da = dx * ray_ - dy * rax
    db = dx * rby - dy * rbx
    collinear = (np.abs(da) <= tol) & (np.abs(db) <= tol)
    miss = ((da > tol) & (db > tol)) | ((da < -tol) & (db < -tol))
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.clip(da / (da - db), 0.0, 1.0)
    t = dx * (rax + u * (bx - ax)) + dy * (ray_ + u * (by - ay))
    hit = ~collinear & ~miss & (t > tol) & (t < lim - tol)
    t0 = np.where(hit, t, np.inf)
    t1 = t0.copy()
    if collinear.any():
        ta = dx * rax + dy * ray_
        tb = dx * rbx + dy * rby
        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        c0 = np.maximum(lo, tol)
        c1 = np.minimum(hi, lim - tol)
        chit = collinear & ~(c1 < c0 - tol) & (c0 < lim - tol) & (hi > tol)
        t0 = np.where(chit, c0, t0)
        t1 = np.where(chit, np.maximum(c0, c1), t1)
    return t0, t1


def first_hits(ox, oy, dirs, limits, walls, tol):
    """Distance to the nearest wall hit of each ray (``inf`` when none)."""
    dirs = np.ascontiguousarray(dirs, dtype=float)
    limits = np.broadcast_to(np.asarray(limits, dtype=float), (len(dirs),))
    out = np.full(len(dirs), np.inf)
    if len(walls) == 0:
        return out
    for s in range(0, len(dirs), _CHUNK):
        t0, _ = _raw_hits(ox, oy, dirs[s:s + _CHUNK], limits[s:s + _CHUNK], walls, tol)
        out[s:s + _CHUNK] = t0.min(axis=1)
    return out


def all_hits(ox, oy, dirs, limits, walls, tol):
    """Sorted, merged crossings of each ray.

    Returns ``(t, att)`` of shape ``(n_rays, n_walls)``: row ``i`` lists the
    start distance and attenuation (dB, group maximum) of each merged
    crossing, padded with ``inf`` / ``0``.
    """
    dirs = np.ascontiguousarray(dirs, dtype=float)
    n, w = len(dirs), len(walls)
    limits = np.broadcast_to(np.asarray(limits, dtype=float), (n,))
    t_out = np.full((n, w), np.inf)
    a_out = np.zeros((n, w))
    if w == 0:
        return t_out, a_out
    for s in range(0, n, _CHUNK):
        t0, t1 = _raw_hits(ox, oy, dirs[s:s + _CHUNK], limits[s:s + _CHUNK], walls, tol)
        m = len(t0)
        order = np.argsort(t0, axis=1, kind="stable")
        t0 = np.take_along_axis(t0, order, axis=1)
        t1 = np.take_along_axis(t1, order, axis=1)
        att = np.where(np.isfinite(t0), walls[:, 4][order], 0.0)
        rows = np.arange(m)
        lead = np.zeros(m, dtype=np.intp)
        end = t1[:, 0].copy()
        for j in range(1, w):
            merge = np.isfinite(t0[:, j]) & (t0[:, j] <= end + tol)
            if merge.any():
                r = rows[merge]
                att[r, lead[merge]] = np.maximum(att[r, lead[merge]], att[r, j])
                att[r, j] = 0.0
                end = np.where(merge, np.maximum(end, t1[:, j]), t1[:, j])
                t0[merge, j] = np.inf
            else:
                end = t1[:, j].copy()
            lead = np.where(merge, lead, j)
        order = np.argsort(t0, axis=1, kind="stable")
        t_out[s:s + m] = np.take_along_axis(t0, order, axis=1)
        a_out[s:s + m] = np.take_along_axis(att, order, axis=1)
    return t_out, a_out
