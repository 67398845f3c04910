"""Asset libraries: meshes, textures and category-labelled backgrounds.

An image library is a directory with an ``index.csv`` holding ``id``,
``file`` and ``category`` columns. Without an index, every image file in
the directory is used and its category is the file's parent directory name.
A mesh library is a directory of ``.obj`` files with optional sidecars.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import MAX_FACES, Mesh, MeshError, load_mesh
from .render import load_rgb

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


class AssetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ImageEntry:
    id: str
    path: Path
    category: str


@dataclass
class ImageLibrary:
    root: Path
    entries: list
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, root) -> ImageLibrary:
        root = Path(root)
        if not root.is_dir():
            raise AssetError(f"image library not found: {root}")
        index = root / "index.csv"
        entries = []
        if index.is_file():
            with open(index, newline="") as fh:
                for row in csv.DictReader(fh):
                    try:
                        entries.append(ImageEntry(row["id"], root / row["file"],
                                                  row.get("category") or "default"))
                    except KeyError as exc:
                        raise AssetError(f"{index}: missing column {exc}") from exc
        else:
            for p in sorted(root.rglob("*")):
                if p.suffix.lower() in IMAGE_SUFFIXES:
                    rel = p.relative_to(root)
                    category = rel.parts[0] if len(rel.parts) > 1 else "default"
                    entries.append(ImageEntry(rel.with_suffix("").as_posix(), p, category))
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise AssetError(f"{root}: duplicate image ids")
        missing = [str(e.path) for e in entries if not e.path.is_file()]
        if missing:
            raise AssetError(f"{root}: missing image files: {', '.join(missing)}")
        if not entries:
            raise AssetError(f"{root}: library is empty")
        return cls(root, entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def category(self, image_id: str) -> str:
        return self._by_id()[image_id].category

    def _by_id(self) -> dict:
        return {e.id: e for e in self.entries}

    def image(self, image_id: str) -> np.ndarray:
        if image_id not in self._cache:
            self._cache[image_id] = load_rgb(self._by_id()[image_id].path)
        return self._cache[image_id]

    def images(self, ids) -> dict:
        return {i: self.image(i) for i in ids}


def load_mesh_library(root, max_faces: int = MAX_FACES) -> dict:
    """Load every ``.obj`` under ``root`` keyed by file stem.

    All failures are collected and raised together.
    """
    root = Path(root)
    if not root.is_dir():
        raise AssetError(f"mesh library not found: {root}")
    meshes, bad = {}, []
    for p in sorted(root.glob("*.obj")):
        try:
            meshes[p.stem] = load_mesh(p, max_faces=max_faces)
        except (MeshError, OSError, ValueError) as exc:
            bad.append(f"{p.name}: {exc}")
    if bad:
        raise AssetError("bad mesh assets:\n  " + "\n  ".join(bad))
    if not meshes:
        raise AssetError(f"{root}: no .obj meshes found")
    return meshes


@dataclass
class Assets:
    meshes: dict  # id -> Mesh
    textures: ImageLibrary
    backgrounds: ImageLibrary

    @classmethod
    def from_config(cls, config) -> Assets:
        errors = []
        parts = {}
        for key, loader in (("meshes", lambda p: load_mesh_library(p, config.max_faces)),
                            ("textures", ImageLibrary.load),
                            ("backgrounds", ImageLibrary.load)):
            try:
                parts[key] = loader(config.asset_path(key))
            except AssetError as exc:
                errors.append(str(exc))
        if errors:
            raise AssetError("\n".join(errors))
        return cls(**parts)

    @property
    def mesh_ids(self) -> list[str]:
        return sorted(self.meshes)

    def mesh(self, mesh_id: str) -> Mesh:
        return self.meshes[mesh_id]
