"""Ground truth: dot annotations, density maps, flips and crops.

Dot coordinates are in pixel-index space: pixel ``(i, j)`` has its center at
``(i, j)``, so a valid dot lies in ``[0, W-1] x [0, H-1]``. A continuous
screen coordinate ``s`` maps to the dot coordinate ``s - 0.5``.

Dots are snapped to a 1/1024 pixel grid. On that grid mirroring about an
integer and shifting by integers are exact in float64, so a double flip
returns the original coordinates bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .render import project
from .rng import Rng

DENSITY_MAGIC = b"DRDM"
DENSITY_VERSION = 1
DOT_GRID = 1024  # subdivisions per pixel


@dataclass
class Annotation:
    image_id: str
    width: int
    height: int
    dots: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))  # (n, 2) x, y
    density: np.ndarray | None = None
    flags: tuple = ()

    def __post_init__(self):
        self.dots = np.asarray(self.dots, dtype=np.float64).reshape(-1, 2)

    @property
    def count(self) -> int:
        return len(self.dots)

    def to_dict(self, image_file: str | None = None, density_file: str | None = None) -> dict:
        return {
            "image": image_file or self.image_id,
            "width": self.width,
            "height": self.height,
            "count": self.count,
            "dots": [[float(x), float(y)] for x, y in self.dots],
            "density": density_file,
            "flags": list(self.flags),
        }


def in_frame(dots, width: int, height: int) -> np.ndarray:
    d = np.asarray(dots, dtype=np.float64).reshape(-1, 2)
    return (d[:, 0] >= 0) & (d[:, 0] <= width - 1) & (d[:, 1] >= 0) & (d[:, 1] <= height - 1)


def snap(dots) -> np.ndarray:
    return np.rint(np.asarray(dots, dtype=np.float64) * DOT_GRID) / DOT_GRID


def make_dots(scene, camera, image_id: str = "") -> Annotation:
    """Project each instance's anchor; anchors outside the depth range or the
    frame are dropped. Occluded anchors stay."""
    dots = []
    for p in scene.anchors():
        proj = project(camera, p)
        if proj is None:
            continue
        dots.append((proj[0] - 0.5, proj[1] - 0.5))
    dots = snap(np.asarray(dots, dtype=np.float64).reshape(-1, 2))
    dots = dots[in_frame(dots, camera.width, camera.height)]
    return Annotation(image_id, camera.width, camera.height, dots)


def _kernel_1d(centers: np.ndarray, n: int, sigma: float) -> np.ndarray:
    # Each row is a truncated Gaussian renormalized to unit mass over the grid.
    grid = np.arange(n, dtype=np.float64)
    k = np.exp(-0.5 * ((grid[None, :] - centers[:, None]) / sigma) ** 2)
    s = k.sum(axis=1, keepdims=True)
    # a center far outside the grid underflows; put its mass on the nearest cell
    empty = s[:, 0] == 0
    if empty.any():
        idx = np.clip(np.rint(centers[empty]), 0, n - 1).astype(np.int64)
        k[empty] = 0.0
        k[np.nonzero(empty)[0], idx] = 1.0
        s[empty] = 1.0
    return k / s


def density_map(dots, width: int, height: int, sigma: float = 4.0) -> np.ndarray:
    """Sum of per-dot isotropic Gaussians, each with unit mass on the grid."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = np.asarray(dots, dtype=np.float64).reshape(-1, 2)
    if len(d) == 0:
        return np.zeros((height, width))
    kx = _kernel_1d(d[:, 0], width, sigma)
    ky = _kernel_1d(d[:, 1], height, sigma)
    return ky.T @ kx


def with_density(ann: Annotation, sigma: float) -> Annotation:
    return replace(ann, density=density_map(ann.dots, ann.width, ann.height, sigma))


def hflip(image: np.ndarray, ann: Annotation) -> tuple[np.ndarray, Annotation]:
    out = image[:, ::-1].copy()
    dots = ann.dots.copy()
    dots[:, 0] = (ann.width - 1) - dots[:, 0]
    density = None if ann.density is None else ann.density[:, ::-1].copy()
    return out, replace(ann, dots=dots, density=density)


def crop(image: np.ndarray, ann: Annotation, size: int, rng: Rng,
         sigma: float | None = None) -> tuple[np.ndarray, Annotation]:
    """Random ``size`` x ``size`` window.

    Images smaller than the window are zero-padded at the bottom/right and
    flagged ``padded``. Dots outside the window are dropped; the density map
    is rebuilt from the kept dots when the input had one (or ``sigma`` is
    given).
    """
    h, w = image.shape[:2]
    flags = list(ann.flags)
    if h < size or w < size:
        padded = np.zeros((max(h, size), max(w, size)) + image.shape[2:], dtype=image.dtype)
        padded[:h, :w] = image
        image, flags = padded, flags + ["padded"]
        h, w = image.shape[:2]
    x0 = int(rng.integers(0, w - size + 1))
    y0 = int(rng.integers(0, h - size + 1))
    return crop_at(image, replace(ann, flags=tuple(flags)), x0, y0, size, sigma)


def crop_at(image, ann: Annotation, x0: int, y0: int, size: int,
            sigma: float | None = None) -> tuple[np.ndarray, Annotation]:
    out = image[y0:y0 + size, x0:x0 + size].copy()
    dots = ann.dots - np.array([x0, y0], dtype=np.float64)
    dots = dots[in_frame(dots, size, size)]
    if sigma is None and ann.density is not None:
        raise ValueError("sigma is required to rebuild the density map after a crop")
    density = None if sigma is None else density_map(dots, size, size, sigma)
    return out, replace(ann, width=size, height=size, dots=dots, density=density)


# -------------------------------------------------------------------- files


def write_annotation(ann: Annotation, path, image_file: str, density_file: str | None = None) -> None:
    Path(path).write_text(json.dumps(ann.to_dict(image_file, density_file), indent=1) + "\n")


def read_annotation(path) -> dict:
    return json.loads(Path(path).read_text())


def write_density(grid: np.ndarray, path) -> None:
    """Little-endian float32 grid after a 16-byte header:
    magic ``DRDM``, uint32 width, uint32 height, uint32 version."""
    g = np.asarray(grid, dtype="<f4")
    h, w = g.shape
    with open(path, "wb") as fh:
        fh.write(DENSITY_MAGIC + struct.pack("<III", w, h, DENSITY_VERSION))
        fh.write(g.tobytes(order="C"))


def read_density(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != DENSITY_MAGIC:
        raise ValueError(f"{path}: not a density grid file")
    w, h, _version = struct.unpack("<III", data[4:16])
    body = np.frombuffer(data, dtype="<f4", offset=16)
    if body.size != w * h:
        raise ValueError(f"{path}: expected {w * h} values, found {body.size}")
    return body.reshape(h, w).astype(np.float64)
