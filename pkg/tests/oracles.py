"""Independent reference implementations used by the tests."""

import math


def naive_mae(pred, truth):
    total = 0.0
    for x, y in zip(pred, truth):
        total += abs(x - y)
    return total / len(pred)


def naive_mse(pred, truth):
    total = 0.0
    for x, y in zip(pred, truth):
        total += (x - y) * (x - y)
    return total / len(pred)


def ray_hit(depth_dir, tri):
    """Moller-Trumbore from the origin along ``depth_dir`` = (dx, dy, 1).

    ``tri`` holds camera-frame points (x, y, depth). Returns the hit depth
    or None.
    """
    (ax, ay, az), (bx, by, bz), (cx, cy, cz) = tri
    e1 = (bx - ax, by - ay, bz - az)
    e2 = (cx - ax, cy - ay, cz - az)
    d = depth_dir
    p = (d[1] * e2[2] - d[2] * e2[1], d[2] * e2[0] - d[0] * e2[2], d[0] * e2[1] - d[1] * e2[0])
    det = e1[0] * p[0] + e1[1] * p[1] + e1[2] * p[2]
    if det == 0:
        return None
    s = (-ax, -ay, -az)
    u = (s[0] * p[0] + s[1] * p[1] + s[2] * p[2]) / det
    if u < 0 or u > 1:
        return None
    q = (s[1] * e1[2] - s[2] * e1[1], s[2] * e1[0] - s[0] * e1[2], s[0] * e1[1] - s[1] * e1[0])
    v = (d[0] * q[0] + d[1] * q[1] + d[2] * q[2]) / det
    if v < 0 or u + v > 1:
        return None
    return (e2[0] * q[0] + e2[1] * q[1] + e2[2] * q[2]) / det


def brute_force_render(tris, colors, width, height, fov_deg, near, far, background):
    """Per-pixel nearest-hit renderer for a camera at the origin looking down
    -z with +y up. ``tris`` are world triangles; returns a nested list image."""
    t = math.tan(math.radians(fov_deg) / 2)
    aspect = width / height
    cam_tris = [[(x, y, -z) for x, y, z in tri] for tri in tris]
    out = [[tuple(int(c) for c in background[j][i]) for i in range(width)] for j in range(height)]
    for j in range(height):
        for i in range(width):
            dx = ((i + 0.5) / width * 2 - 1) * t * aspect
            dy = (1 - (j + 0.5) / height * 2) * t
            best = math.inf
            for tri, color in zip(cam_tris, colors):
                hit = ray_hit((dx, dy, 1.0), tri)
                if hit is not None and near < hit < far and hit < best:
                    best = hit
                    out[j][i] = tuple(color)
    return out


def window_members(dots, x0, y0, size):
    kept = []
    for x, y in dots:
        if x0 <= x <= x0 + size - 1 and y0 <= y <= y0 + size - 1:
            kept.append([x - x0, y - y0])
    return kept


def mean_nearest_neighbor(points):
    n = len(points)
    if n < 2:
        return None
    total = 0.0
    for i, (x, y) in enumerate(points):
        best = math.inf
        for k, (u, v) in enumerate(points):
            if k != i:
                best = min(best, math.hypot(x - u, y - v))
        total += best
    return total / n
