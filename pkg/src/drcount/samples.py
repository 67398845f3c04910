"""Built-in low-poly objects and procedural texture/background libraries.

These let the generator run end to end without external corpora. Any
directory laid out the same way can replace them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import Mesh, box, combine, cylinder, save_mesh, uv_sphere
from .rng import make_rng


def human() -> Mesh:
    parts = [
        uv_sphere(0.32, 8, 5, center=(0, 1.55, 0), part="skin"),
        box((0.28, 0.18, 0.28), center=(0, 1.38, 0), part="hair"),
        box((0.7, 0.75, 0.35), center=(0, 0.95, 0), part="shirt"),
        box((0.2, 0.7, 0.22), center=(-0.47, 0.92, 0), part="skin"),
        box((0.2, 0.7, 0.22), center=(0.47, 0.92, 0), part="skin"),
        box((0.26, 0.6, 0.28), center=(-0.18, 0.3, 0), part="pants"),
        box((0.26, 0.6, 0.28), center=(0.18, 0.3, 0), part="pants"),
    ]
    m = combine(parts, name="human")
    # hair block sits inside the head; the dot goes on the top of the head
    return replace(m, anchor_index=int(np.argmax(m.vertices[:, 1])))


def car() -> Mesh:
    parts = [
        box((2.0, 0.5, 1.0), center=(0, 0.45, 0), part="body"),
        box((1.1, 0.4, 0.9), center=(-0.1, 0.9, 0), part="cabin"),
    ]
    for x in (-0.65, 0.65):
        for z in (-0.5, 0.5):
            parts.append(cylinder(0.22, 0.16, 6, center=(x, 0.22, z), axis="z", part="wheel"))
    return replace(combine(parts, name="car"), anchor_mode="centroid")


def penguin() -> Mesh:
    parts = [
        uv_sphere((0.4, 0.6, 0.35), 8, 5, center=(0, 0.6, 0), part="body"),
        uv_sphere(0.25, 8, 4, center=(0, 1.3, 0), part="head"),
        box((0.1, 0.08, 0.2), center=(0, 1.28, 0.28), part="beak"),
        box((0.15, 0.06, 0.25), center=(-0.15, 0.03, 0.1), part="feet"),
        box((0.15, 0.06, 0.25), center=(0.15, 0.03, 0.1), part="feet"),
    ]
    return replace(combine(parts, name="penguin"), anchor_mode="centroid")


def apple() -> Mesh:
    parts = [
        uv_sphere((0.5, 0.45, 0.5), 10, 6, center=(0, 0.45, 0), part="skin"),
        cylinder(0.04, 0.25, 4, center=(0, 0.95, 0), part="stem"),
        box((0.2, 0.03, 0.1), center=(0.12, 0.95, 0), part="leaf"),
    ]
    return replace(combine(parts, name="apple"), anchor_mode="centroid")


SAMPLE_BUILDERS = {"human": human, "car": car, "penguin": penguin, "apple": apple}


def sample_mesh_dir() -> Path:
    return Path(str(resources.files("drcount") / "data" / "meshes"))


def write_sample_meshes(out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, build in SAMPLE_BUILDERS.items():
        mesh = build()
        path = out_dir / f"{name}.obj"
        save_mesh(mesh, path)
        anchor = "centroid" if mesh.anchor_mode == "centroid" else mesh.anchor_index
        path.with_suffix(".json").write_text(json.dumps({"anchor": anchor}) + "\n")
        paths.append(path)
    return paths


# ------------------------------------------------------------------ images


def _random_color(rng) -> np.ndarray:
    return rng.uniform(0, 255, size=3)


def _texture(kind: str, size: int, rng) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    a, b = _random_color(rng), _random_color(rng)
    if kind == "checkered":
        n = int(rng.integers(2, 9))
        mask = ((xx * n // size + yy * n // size) % 2).astype(bool)
    elif kind == "striped":
        freq = rng.uniform(2, 10)
        ang = rng.uniform(0, np.pi)
        mask = np.sin((xx * np.cos(ang) + yy * np.sin(ang)) / size * 2 * np.pi * freq) > 0
    elif kind == "dotted":
        n = int(rng.integers(3, 8))
        cell = size / n
        dx = (xx % cell) - cell / 2
        dy = (yy % cell) - cell / 2
        mask = dx**2 + dy**2 < (cell * rng.uniform(0.15, 0.4)) ** 2
    else:  # marbled
        coarse = rng.uniform(0, 1, size=(8, 8))
        t = np.asarray(Image.fromarray((coarse * 255).astype(np.uint8)).resize(
            (size, size), Image.BILINEAR), dtype=np.float64) / 255
        return (a * t[..., None] + b * (1 - t[..., None])).astype(np.uint8)
    return np.where(mask[..., None], a, b).astype(np.uint8)


TEXTURE_KINDS = ("checkered", "striped", "dotted", "marbled")
BACKGROUND_CATEGORIES = ("street", "forest", "indoor", "beach", "stadium-football", "iceberg")


def _background(category: str, width: int, height: int, rng) -> np.ndarray:
    top, bottom = _random_color(rng), _random_color(rng)
    t = np.linspace(0, 1, height)[:, None, None]
    img = top * (1 - t) + bottom * t
    img = np.broadcast_to(img, (height, width, 3)).copy()
    for _ in range(int(rng.integers(3, 12))):
        x0, y0 = rng.integers(0, width), rng.integers(0, height)
        w, h = rng.integers(width // 20, width // 3), rng.integers(height // 20, height // 3)
        img[y0:y0 + h, x0:x0 + w] = _random_color(rng)
    img += rng.normal(0, 6, size=img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def write_demo_assets(root, n_textures: int = 24, n_backgrounds: int = 24,
                      bg_size=(640, 480), texture_size: int = 64, seed: int = 0) -> dict:
    """Populate ``root`` with meshes/, textures/ and backgrounds/ libraries.

    Each image library gets an ``index.csv`` with ``id,file,category``.
    """
    root = Path(root)
    rng = make_rng(seed)
    write_sample_meshes(root / "meshes")
    out = {"meshes": root / "meshes"}
    for lib, count, kinds in (("textures", n_textures, TEXTURE_KINDS),
                              ("backgrounds", n_backgrounds, BACKGROUND_CATEGORIES)):
        d = root / lib
        d.mkdir(parents=True, exist_ok=True)
        rows = []
        for i in range(count):
            kind = kinds[i % len(kinds)]
            if lib == "textures":
                img = _texture(kind, texture_size, rng)
            else:
                img = _background(kind, bg_size[0], bg_size[1], rng)
            name = f"{kind}_{i:04d}.png"
            Image.fromarray(img).save(d / name)
            rows.append({"id": f"{kind}_{i:04d}", "file": name, "category": kind})
        with open(d / "index.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["id", "file", "category"])
            writer.writeheader()
            writer.writerows(rows)
        out[lib] = d
    return out
