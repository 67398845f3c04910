"""Compiled inner loop of the rasterizer."""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure Python fallback is slow but exact
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def _owned(ax, ay, bx, by):
    dy = by - ay
    return dy > 0.0 or (dy == 0.0 and bx - ax < 0.0)


@njit(cache=True)
def raster_triangles(color, zbuf, sxy, z, uv, shade, tex_id, tex_data, tex_off, tex_h, tex_w, far):
    """Draw screen-space triangles in order.

    sxy: (T, 3, 2) pixel coords; z: (T, 3) view depth; uv: (T, 3, 2);
    shade: (T, 3) RGB factor; textures are flattened into ``tex_data`` with
    per-texture offset/height/width. Returns the number of fragments written.
    """
    H, W = zbuf.shape
    written = 0
    for t in range(sxy.shape[0]):
        ax, ay = sxy[t, 0, 0], sxy[t, 0, 1]
        bx, by = sxy[t, 1, 0], sxy[t, 1, 1]
        cx, cy = sxy[t, 2, 0], sxy[t, 2, 1]
        za, zb, zc = z[t, 0], z[t, 1], z[t, 2]
        ua, va = uv[t, 0, 0], uv[t, 0, 1]
        ub, vb = uv[t, 1, 0], uv[t, 1, 1]
        uc, vc = uv[t, 2, 0], uv[t, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0 or not math.isfinite(area):
            continue
        if area < 0.0:
            bx, by, cx, cy = cx, cy, bx, by
            zb, zc = zc, zb
            ub, vb, uc, vc = uc, vc, ub, vb
            area = -area
        x0 = max(0, int(math.floor(min(ax, bx, cx) - 0.5)))
        x1 = min(W - 1, int(math.ceil(max(ax, bx, cx) - 0.5)))
        y0 = max(0, int(math.floor(min(ay, by, cy) - 0.5)))
        y1 = min(H - 1, int(math.ceil(max(ay, by, cy) - 0.5)))
        if x0 > x1 or y0 > y1:
            continue
        own_a = _owned(bx, by, cx, cy)  # edge opposite a
        own_b = _owned(cx, cy, ax, ay)
        own_c = _owned(ax, ay, bx, by)
        iza, izb, izc = 1.0 / za, 1.0 / zb, 1.0 / zc
        k = tex_id[t]
        off, th, tw = tex_off[k], tex_h[k], tex_w[k]
        sr, sg, sb = shade[t, 0], shade[t, 1], shade[t, 2]
        for py in range(y0, y1 + 1):
            fy = py + 0.5
            for px in range(x0, x1 + 1):
                fx = px + 0.5
                wa = (cx - bx) * (fy - by) - (cy - by) * (fx - bx)
                if wa < 0.0 or (wa == 0.0 and not own_a):
                    continue
                wb = (ax - cx) * (fy - cy) - (ay - cy) * (fx - cx)
                if wb < 0.0 or (wb == 0.0 and not own_b):
                    continue
                wc = (bx - ax) * (fy - ay) - (by - ay) * (fx - ax)
                if wc < 0.0 or (wc == 0.0 and not own_c):
                    continue
                b0, b1, b2 = wa / area, wb / area, wc / area
                inv = b0 * iza + b1 * izb + b2 * izc
                d = 1.0 / inv
                if not (d < zbuf[py, px] and d < far):
                    continue
                u = (b0 * ua * iza + b1 * ub * izb + b2 * uc * izc) / inv
                v = (b0 * va * iza + b1 * vb * izb + b2 * vc * izc) / inv
                u = u - math.floor(u)
                v = v - math.floor(v)
                col = min(int(u * tw), tw - 1)
                row = min(int((1.0 - v) * th), th - 1)
                base = off + (row * tw + col) * 3
                zbuf[py, px] = d
                color[py, px, 0] = np.uint8(np.rint(min(max(tex_data[base] * sr, 0.0), 255.0)))
                color[py, px, 1] = np.uint8(np.rint(min(max(tex_data[base + 1] * sg, 0.0), 255.0)))
                color[py, px, 2] = np.uint8(np.rint(min(max(tex_data[base + 2] * sb, 0.0), 255.0)))
                written += 1
    return written
