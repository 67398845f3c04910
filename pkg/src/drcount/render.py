"""Pinhole camera and a small z-buffered triangle rasterizer.

Screen space has its origin at the top-left image corner with pixel ``(i, j)``
covering ``[i, i+1) x [j, j+1)``; a pixel is covered when its center lies
inside a triangle. Depth is the positive distance along the view axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ._raster import raster_triangles


@dataclass(frozen=True)
class Camera:
    position: tuple = (0.0, 0.0, 0.0)
    target: tuple = (0.0, 0.0, -1.0)
    up: tuple = (0.0, 1.0, 0.0)
    fov: float = 60.0  # vertical, degrees
    near: float = 0.1
    far: float = 1000.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if not 0 < self.near < self.far:
            raise ValueError(f"need 0 < near < far, got {self.near}, {self.far}")
        if not 0 < self.fov < 180:
            raise ValueError(f"fov must be in (0, 180), got {self.fov}")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        fwd = np.subtract(self.target, self.position)
        if np.linalg.norm(fwd) == 0 or np.linalg.norm(np.cross(fwd, self.up)) == 0:
            raise ValueError("camera target must differ from position and not lie along up")

    @property
    def aspect(self) -> float:
        return self.width / self.height

    @property
    def tan_half_fov(self) -> float:
        return math.tan(math.radians(self.fov) / 2)

    def rotation(self) -> np.ndarray:
        """Rows are the camera right, up and backward axes in world space."""
        fwd = np.asarray(self.target, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return np.stack([right, up, -fwd])

    def to_camera(self, points) -> np.ndarray:
        """World points -> (x_right, y_up, depth) with depth > 0 in front."""
        p = np.asarray(points, dtype=np.float64) - np.asarray(self.position, dtype=np.float64)
        c = p @ self.rotation().T
        c[..., 2] = -c[..., 2]
        return c

    def from_camera(self, points) -> np.ndarray:
        c = np.array(points, dtype=np.float64)
        c[..., 2] = -c[..., 2]
        return c @ self.rotation() + np.asarray(self.position, dtype=np.float64)

    def to_screen(self, cam_points) -> np.ndarray:
        """Camera-space points with positive depth -> continuous pixel coords."""
        c = np.asarray(cam_points, dtype=np.float64)
        d = c[..., 2]
        sx = (c[..., 0] / d / (self.tan_half_fov * self.aspect) + 1.0) * (self.width / 2)
        sy = (1.0 - c[..., 1] / d / self.tan_half_fov) * (self.height / 2)
        return np.stack([sx, sy], axis=-1)


def project(camera: Camera, point):
    """Project one world point to ``(x, y, depth)`` in continuous pixel
    coordinates, or return None when the point lies outside (near, far)."""
    c = camera.to_camera(point)
    if not camera.near < c[2] < camera.far:
        return None
    sx, sy = camera.to_screen(c)
    return float(sx), float(sy), float(c[2])


@dataclass(frozen=True)
class Light:
    position: tuple
    color: tuple  # RGB in [0, 1]
    intensity: float = 1.0


@dataclass
class Framebuffer:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64, +inf where nothing was drawn

    @classmethod
    def from_background(cls, background: np.ndarray) -> Framebuffer:
        bg = np.asarray(background)
        if bg.ndim != 3 or bg.shape[2] != 3 or bg.dtype != np.uint8:
            raise ValueError("background must be an (H, W, 3) uint8 array")
        return cls(bg.copy(), np.full(bg.shape[:2], np.inf))

    @property
    def width(self) -> int:
        return self.color.shape[1]

    @property
    def height(self) -> int:
        return self.color.shape[0]


@dataclass
class DrawStats:
    triangles: int = 0
    fragments: int = 0


def fit_background(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Scale to cover (width, height) then center-crop."""
    h, w = image.shape[:2]
    if (w, h) == (width, height):
        return np.ascontiguousarray(image[..., :3])
    s = max(width / w, height / h)
    nw, nh = max(width, round(w * s)), max(height, round(h * s))
    img = Image.fromarray(image[..., :3]).resize((nw, nh), Image.BILINEAR)
    x0, y0 = (nw - width) // 2, (nh - height) // 2
    return np.asarray(img, dtype=np.uint8)[y0:y0 + height, x0:x0 + width].copy()


def _clip_near(cam: np.ndarray, uv: np.ndarray, near: float):
    """Clip a camera-space triangle to depth >= near; returns a polygon."""
    out_p, out_uv = [], []
    for i in range(3):
        j = (i + 1) % 3
        pi, pj = cam[i], cam[j]
        inside_i, inside_j = pi[2] >= near, pj[2] >= near
        if inside_i:
            out_p.append(pi)
            out_uv.append(uv[i])
        if inside_i != inside_j:
            t = (near - pi[2]) / (pj[2] - pi[2])
            out_p.append(pi + t * (pj - pi))
            out_uv.append(uv[i] + t * (uv[j] - uv[i]))
    return out_p, out_uv


def face_shading(normals: np.ndarray, centroids: np.ndarray, lights, ambient) -> np.ndarray:
    """Per-face RGB factor: ambient + sum of two-sided Lambert terms, in [0, 1]."""
    shade = np.broadcast_to(np.asarray(ambient, dtype=np.float64), (len(normals), 3)).copy()
    if lights:
        n = normals / np.maximum(np.linalg.norm(normals, axis=1, keepdims=True), 1e-300)
        for light in lights:
            d = np.asarray(light.position, dtype=np.float64) - centroids
            d /= np.maximum(np.linalg.norm(d, axis=1, keepdims=True), 1e-300)
            lam = np.abs(np.einsum("ij,ij->i", n, d))
            shade += lam[:, None] * (np.asarray(light.color, dtype=np.float64) * light.intensity)
    return np.clip(shade, 0.0, 1.0)


def sample_texture(tex: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Nearest-texel lookup with wrap-around; v = 0 is the bottom row."""
    h, w = tex.shape[:2]
    u = u - np.floor(u)
    v = v - np.floor(v)
    col = np.minimum((u * w).astype(np.int64), w - 1)
    row = np.minimum(((1.0 - v) * h).astype(np.int64), h - 1)
    return tex[row, col, :3]


class TextureAtlas:
    """Textures flattened into one buffer for the compiled kernel."""

    def __init__(self, textures: dict):
        self.ids = {}
        chunks, off, hs, ws = [], [], [], []
        pos = 0
        for i, (key, tex) in enumerate(textures.items()):
            t = np.ascontiguousarray(np.asarray(tex, dtype=np.uint8)[..., :3])
            self.ids[key] = i
            chunks.append(t.ravel())
            off.append(pos)
            hs.append(t.shape[0])
            ws.append(t.shape[1])
            pos += t.size
        self.data = np.concatenate(chunks) if chunks else np.zeros(3, dtype=np.uint8)
        self.offset = np.asarray(off, dtype=np.int64)
        self.height = np.asarray(hs, dtype=np.int64)
        self.width = np.asarray(ws, dtype=np.int64)


def screen_triangles(camera: Camera, vertices, faces, uvs):
    """Cull and near-clip world triangles.

    Returns (face index, screen xy (T,3,2), depth (T,3), uv (T,3,2)) for the
    triangles left, in face order; a clipped face may yield two triangles.
    """
    cam = camera.to_camera(np.asarray(vertices, dtype=np.float64))
    faces = np.asarray(faces, dtype=np.int64)
    uvs = np.asarray(uvs, dtype=np.float64)
    tri = cam[faces]
    tuv = uvs[faces]
    depth = tri[:, :, 2]
    live = (depth.max(axis=1) > camera.near) & (depth.min(axis=1) < camera.far)
    needs_clip = live & (depth.min(axis=1) < camera.near)
    src, pts, tex = [], [], []
    for fi in np.nonzero(live)[0]:
        if needs_clip[fi]:
            poly, poly_uv = _clip_near(tri[fi], tuv[fi], camera.near)
            for k in range(1, len(poly) - 1):
                src.append(fi)
                pts.append([poly[0], poly[k], poly[k + 1]])
                tex.append([poly_uv[0], poly_uv[k], poly_uv[k + 1]])
        else:
            src.append(fi)
            pts.append(tri[fi])
            tex.append(tuv[fi])
    if not src:
        return np.zeros(0, np.int64), np.zeros((0, 3, 2)), np.zeros((0, 3)), np.zeros((0, 3, 2))
    pts = np.asarray(pts, dtype=np.float64)
    return (np.asarray(src, dtype=np.int64), camera.to_screen(pts), pts[:, :, 2].copy(),
            np.asarray(tex, dtype=np.float64))


def draw_mesh(fb: Framebuffer, camera: Camera, vertices, faces, uvs, face_textures,
              textures, lights=(), ambient=1.0, stats: DrawStats | None = None) -> None:
    """Rasterize world-space triangles into ``fb``.

    ``face_textures[f]`` keys into ``textures`` (a dict of (h, w, 3) uint8
    arrays or a prebuilt TextureAtlas). The depth test is strict, so at
    exactly equal depth the earlier fragment stays.
    """
    atlas = textures if isinstance(textures, TextureAtlas) else TextureAtlas(textures)
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    src, sxy, z, tuv = screen_triangles(camera, vertices, faces, uvs)
    if len(src) == 0:
        return
    tri = vertices[faces[src]]
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    shade = face_shading(normals, tri.mean(axis=1), lights, ambient)
    tex_id = np.array([atlas.ids[face_textures[f]] for f in src], dtype=np.int64)
    n = raster_triangles(fb.color, fb.depth, sxy, z, tuv, shade, tex_id, atlas.data,
                         atlas.offset, atlas.height, atlas.width, float(camera.far))
    if stats is not None:
        stats.triangles += len(src)
        stats.fragments += int(n)


def darken_shadows(fb: Framebuffer, camera: Camera, meshes, strength: float = 0.45) -> None:
    """Screen-space contact shadow: darken an ellipse under each object.

    A stand-in for cast shadows; applied to the background before objects
    are drawn.
    """
    H, W = fb.height, fb.width
    yy, xx = np.mgrid[0:H, 0:W].astype(np.float64) + 0.5
    factor = np.ones((H, W))
    for verts in meshes:
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        foot = np.array([(lo[0] + hi[0]) / 2, lo[1], (lo[2] + hi[2]) / 2])
        edge = foot + np.array([(hi[0] - lo[0]) / 2 + (hi[2] - lo[2]) / 4, 0.0, 0.0])
        pf, pe = project(camera, foot), project(camera, edge)
        if pf is None or pe is None:
            continue
        rx = max(abs(pe[0] - pf[0]), 1.0)
        ry = max(rx * 0.35, 1.0)
        d2 = ((xx - pf[0]) / rx) ** 2 + ((yy - pf[1]) / ry) ** 2
        factor *= 1.0 - strength * np.clip(1.0 - d2, 0.0, 1.0)
    fb.color[:] = np.rint(fb.color * factor[..., None]).astype(np.uint8)


def rasterize(scene, camera: Camera, background: np.ndarray, textures,
              shadows: bool = False, stats: DrawStats | None = None) -> Framebuffer:
    """Render a built scene over ``background``.

    Instances are drawn in scene order. ``textures`` maps texture ids used by
    the instances to (h, w, 3) uint8 arrays.
    """
    fb = Framebuffer.from_background(fit_background(background, camera.width, camera.height))
    if shadows:
        darken_shadows(fb, camera, [inst.mesh.vertices for inst in scene.instances])
    atlas = TextureAtlas(textures)
    for inst in scene.instances:
        m = inst.mesh
        face_tex = [inst.textures[m.part_names[label]] for label in m.part_labels]
        draw_mesh(fb, camera, m.vertices, m.faces, m.uvs, face_tex, atlas,
                  scene.lights, scene.ambient, stats)
    return fb


def save_png(image: np.ndarray, path) -> None:
    # fixed encoder settings keep the file bytes reproducible
    Image.fromarray(np.asarray(image, dtype=np.uint8), "RGB").save(path, format="PNG", optimize=False,
                                                                   compress_level=6)


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
