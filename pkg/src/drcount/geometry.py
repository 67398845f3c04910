"""Triangle meshes, Wavefront loading and the randomizing 3D transforms."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .rng import Rng

log = logging.getLogger(__name__)

MAX_FACES = 200
AXES = ("x", "y", "z")

# Bounds of the per-instance draws.
OBJECT_SCALE_RANGE = (1.0, 8.0)  # divided by the number of objects
THICKNESS_RANGE = (-0.1, 0.5)
RANDOMIZE_FACTOR = 0.4


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (V, 3) float64
    faces: np.ndarray  # (F, 3) int64
    uvs: np.ndarray  # (V, 2) float64 in [0, 1]
    part_labels: np.ndarray  # (F,) int64, indexes part_names
    anchor_index: int = 0
    part_names: tuple = ("default",)
    anchor_mode: str = "vertex"  # "vertex" or "centroid"
    name: str = "mesh"

    def __post_init__(self):
        v = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        uv = np.array(self.uvs, dtype=np.float64).reshape(-1, 2)
        labels = np.array(self.part_labels, dtype=np.int64).reshape(-1)
        for arr in (v, f, uv, labels):
            arr.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        object.__setattr__(self, "uvs", uv)
        object.__setattr__(self, "part_labels", labels)
        object.__setattr__(self, "part_names", tuple(self.part_names))
        object.__setattr__(self, "anchor_index", int(self.anchor_index))
        self._check()

    def _check(self):
        n = len(self.vertices)
        if len(self.faces) == 0:
            raise MeshError(f"{self.name}: mesh has no faces")
        if len(self.uvs) != n:
            raise MeshError(f"{self.name}: {len(self.uvs)} uvs for {n} vertices")
        if len(self.part_labels) != len(self.faces):
            raise MeshError(f"{self.name}: part label count does not match face count")
        if self.faces.min() < 0 or self.faces.max() >= n:
            raise MeshError(f"{self.name}: face index out of range")
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise MeshError(f"{self.name}: degenerate face repeats a vertex")
        if not 0 <= self.anchor_index < n:
            raise MeshError(f"{self.name}: anchor index {self.anchor_index} out of range")
        if self.part_labels.min() < 0 or self.part_labels.max() >= len(self.part_names):
            raise MeshError(f"{self.name}: part label without a part name")
        if self.anchor_mode not in ("vertex", "centroid"):
            raise MeshError(f"{self.name}: unknown anchor mode {self.anchor_mode!r}")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def with_vertices(self, vertices) -> Mesh:
        return replace(self, vertices=vertices)

    def anchor_point(self) -> np.ndarray:
        """Point projected to form this object's dot annotation."""
        if self.anchor_mode == "centroid":
            return self.vertices.mean(axis=0)
        return self.vertices[self.anchor_index].copy()

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        if axis not in AXES:
            raise ValueError(f"unknown axis {axis!r}")
        return AXES.index(axis)
    if axis not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    return int(axis)


# ---------------------------------------------------------------- loading


def _obj_index(token: str, count: int) -> int:
    i = int(token)
    return i - 1 if i > 0 else count + i


def _spherical_uvs(vertices: np.ndarray) -> np.ndarray:
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    d = vertices - (lo + hi) / 2
    r = np.linalg.norm(d, axis=1)
    r[r == 0] = 1.0
    u = 0.5 + np.arctan2(d[:, 2], d[:, 0]) / (2 * np.pi)
    v = 0.5 + np.arcsin(np.clip(d[:, 1] / r, -1, 1)) / np.pi
    return np.clip(np.stack([u, v], axis=1), 0.0, 1.0)


def parse_obj(text: str, name: str = "mesh", max_faces: int | None = MAX_FACES) -> Mesh:
    """Parse Wavefront OBJ text into a Mesh.

    Polygons are fan-triangulated. ``usemtl`` and ``g`` statements both set
    the current part; faces before either belong to ``default``. A vertex
    takes the first texture coordinate any face pairs it with.
    """
    verts, tex = [], []
    faces, face_tex, labels = [], [], []
    part_names: list[str] = []
    current = "default"

    def part_id(part: str) -> int:
        if part not in part_names:
            part_names.append(part)
        return part_names.index(part)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *rest = line.split()
        try:
            if tag == "v":
                verts.append([float(x) for x in rest[:3]])
                if len(rest) < 3:
                    raise ValueError("vertex needs 3 coordinates")
            elif tag == "vt":
                uv = [float(x) for x in rest[:2]] + [0.0] * (2 - len(rest[:2]))
                tex.append(uv)
            elif tag in ("usemtl", "g", "o") and rest:
                if tag != "o":
                    current = rest[0]
            elif tag == "f":
                if len(rest) < 3:
                    raise ValueError("face needs at least 3 vertices")
                vi, ti = [], []
                for corner in rest:
                    bits = corner.split("/")
                    vi.append(_obj_index(bits[0], len(verts)))
                    ti.append(_obj_index(bits[1], len(tex)) if len(bits) > 1 and bits[1] else None)
                label = part_id(current)
                for k in range(1, len(vi) - 1):
                    faces.append([vi[0], vi[k], vi[k + 1]])
                    face_tex.append([ti[0], ti[k], ti[k + 1]])
                    labels.append(label)
        except (ValueError, IndexError) as exc:
            raise MeshError(f"{name}:{lineno}: malformed line {raw!r} ({exc})") from exc

    if not verts or not faces:
        raise MeshError(f"{name}: no triangle geometry")
    if max_faces is not None and len(faces) > max_faces:
        raise MeshError(f"{name}: face budget exceeded ({len(faces)} > {max_faces})")

    vertices = np.asarray(verts, dtype=np.float64)
    f = np.asarray(faces, dtype=np.int64)
    if f.min() < 0 or f.max() >= len(vertices):
        raise MeshError(f"{name}: face index out of range")

    uvs = _spherical_uvs(vertices)
    assigned = np.zeros(len(vertices), dtype=bool)
    for fv, ft in zip(faces, face_tex):
        for v, t in zip(fv, ft):
            if t is not None and not assigned[v]:
                if not 0 <= t < len(tex):
                    raise MeshError(f"{name}: texture index out of range")
                uvs[v] = tex[t]
                assigned[v] = True

    if not part_names:
        part_names = ["default"]
    anchor = int(np.argmax(vertices[:, 1]))
    return Mesh(vertices, f, uvs, labels, anchor_index=anchor,
                part_names=tuple(part_names), name=name)


def load_mesh(path, max_faces: int | None = MAX_FACES) -> Mesh:
    """Load an OBJ file plus its optional ``<stem>.json`` sidecar.

    The sidecar may set ``"anchor"`` to a vertex index, ``"top"`` (the
    highest-y vertex, the default) or ``"centroid"``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"mesh file not found: {path}")
    mesh = parse_obj(path.read_text(), name=path.stem, max_faces=max_faces)
    sidecar = path.with_suffix(".json")
    if sidecar.is_file():
        meta = json.loads(sidecar.read_text())
        anchor = meta.get("anchor", "top")
        if anchor == "centroid":
            mesh = replace(mesh, anchor_mode="centroid")
        elif isinstance(anchor, int) and not isinstance(anchor, bool):
            mesh = replace(mesh, anchor_index=anchor)
        elif anchor != "top":
            raise MeshError(f"{sidecar}: bad anchor {anchor!r}")
    return mesh


def to_obj(mesh: Mesh) -> str:
    lines = [f"# {mesh.name}: {mesh.n_vertices} vertices, {mesh.n_faces} faces"]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"vt {u:.6f} {v:.6f}" for u, v in mesh.uvs]
    current = None
    for face, label in zip(mesh.faces, mesh.part_labels):
        if label != current:
            lines.append(f"usemtl {mesh.part_names[label]}")
            current = label
        a, b, c = (int(i) + 1 for i in face)
        lines.append(f"f {a}/{a} {b}/{b} {c}/{c}")
    return "\n".join(lines) + "\n"


def save_mesh(mesh: Mesh, path) -> None:
    Path(path).write_text(to_obj(mesh))


# -------------------------------------------------------------- transforms


def scale_axis(mesh: Mesh, axis, factor: float) -> Mesh:
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    v = mesh.vertices.copy()
    v[:, _axis_index(axis)] *= factor
    return mesh.with_vertices(v)


def scale_uniform(mesh: Mesh, factor: float) -> Mesh:
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return mesh.with_vertices(mesh.vertices * factor)


def sample_object_scale(n_objects: int, rng: Rng, size=None):
    """Object size K ~ U(1/N, 8/N) for a scene holding N objects.

    Returns a float, or an array when ``size`` is given.
    """
    if n_objects < 1:
        raise ValueError("object scale is undefined for fewer than one object")
    lo, hi = OBJECT_SCALE_RANGE[0] / n_objects, OBJECT_SCALE_RANGE[1] / n_objects
    # lo + (hi - lo) * u can round one ulp past hi
    k = np.clip(rng.uniform(lo, hi, size=size), lo, hi)
    return float(k) if size is None else k


def sample_thickness(rng: Rng, size=None):
    t = np.clip(rng.uniform(*THICKNESS_RANGE, size=size), *THICKNESS_RANGE)
    return float(t) if size is None else t


def edges(mesh: Mesh) -> np.ndarray:
    f = mesh.faces
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def mean_edge_length(mesh: Mesh) -> float:
    e = edges(mesh)
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean())


def randomize_vertices(mesh: Mesh, factor: float, rng: Rng,
                       length_scale: float | None = None) -> Mesh:
    """Jitter every vertex by independent per-axis offsets.

    Offsets are uniform in ``[-factor * e, factor * e]`` where ``e`` is the
    mean edge length unless ``length_scale`` overrides it.
    """
    if factor < 0:
        raise ValueError(f"randomize factor must be non-negative, got {factor}")
    e = mean_edge_length(mesh) if length_scale is None else float(length_scale)
    bound = factor * e
    offsets = rng.uniform(-bound, bound, size=mesh.vertices.shape)
    return mesh.with_vertices(mesh.vertices + offsets)


def face_normals(mesh: Mesh) -> np.ndarray:
    """Unnormalized face normals; their length is twice the face area."""
    v = mesh.vertices
    f = mesh.faces
    return np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])


def vertex_normals(mesh: Mesh) -> np.ndarray:
    """Area-weighted unit vertex normals.

    Vertices touched by no face get a zero vector and a logged warning.
    """
    fn = face_normals(mesh)
    acc = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(acc, mesh.faces[:, k], fn)
    norm = np.linalg.norm(acc, axis=1)
    isolated = np.ones(mesh.n_vertices, dtype=bool)
    isolated[mesh.faces.ravel()] = False
    if isolated.any():
        log.warning("%s: %d isolated vertices get zero normals", mesh.name, int(isolated.sum()))
    out = np.zeros_like(acc)
    ok = norm > 0
    out[ok] = acc[ok] / norm[ok, None]
    return out


def solidify(mesh: Mesh, thickness: float) -> Mesh:
    """Thicken a closed mesh into a two-shell solid.

    Each vertex gets a twin offset by ``thickness`` along its vertex normal;
    the twin faces use reversed winding. No rim faces are built, so open
    boundaries stay open.
    """
    n = vertex_normals(mesh)
    nv = mesh.n_vertices
    vertices = np.concatenate([mesh.vertices, mesh.vertices + thickness * n])
    faces = np.concatenate([mesh.faces, mesh.faces[:, ::-1] + nv])
    return replace(
        mesh,
        vertices=vertices,
        faces=faces,
        uvs=np.concatenate([mesh.uvs, mesh.uvs]),
        part_labels=np.concatenate([mesh.part_labels, mesh.part_labels]),
    )


def rotate_y(mesh: Mesh, angle: float) -> Mesh:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return mesh.with_vertices(mesh.vertices @ rot.T)


def translate(mesh: Mesh, offset) -> Mesh:
    return mesh.with_vertices(mesh.vertices + np.asarray(offset, dtype=np.float64))


# --------------------------------------------------------------- primitives


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), part: str = "default",
        name: str = "box") -> Mesh:
    """Closed box with 8 shared vertices and 12 outward-wound triangles."""
    sx, sy, sz = np.asarray(size, dtype=np.float64) / 2
    corners = np.array([[x, y, z] for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)])
    faces = [
        [0, 1, 3], [0, 3, 2],  # -x
        [4, 6, 7], [4, 7, 5],  # +x
        [0, 4, 5], [0, 5, 1],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [0, 2, 6], [0, 6, 4],  # -z
        [1, 5, 7], [1, 7, 3],  # +z
    ]
    uvs = (corners[:, [0, 1]] / (2 * np.array([sx, sy])) + 0.5)
    vertices = corners + np.asarray(center, dtype=np.float64)
    return Mesh(vertices, faces, uvs, np.zeros(12, dtype=np.int64),
                anchor_index=int(np.argmax(vertices[:, 1])), part_names=(part,), name=name)


def uv_sphere(radius=1.0, segments: int = 8, rings: int = 5, center=(0.0, 0.0, 0.0),
              part: str = "default", name: str = "sphere") -> Mesh:
    """Closed UV sphere; ``radius`` may be a per-axis triple for ellipsoids."""
    r = np.broadcast_to(np.asarray(radius, dtype=np.float64), (3,))
    verts = [[0.0, 1.0, 0.0]]
    uvs = [[0.5, 1.0]]
    for i in range(1, rings):
        phi = np.pi * i / rings
        for j in range(segments):
            theta = 2 * np.pi * j / segments
            verts.append([np.sin(phi) * np.cos(theta), np.cos(phi), np.sin(phi) * np.sin(theta)])
            uvs.append([j / segments, 1 - i / rings])
    verts.append([0.0, -1.0, 0.0])
    uvs.append([0.5, 0.0])
    bottom = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * segments + j % segments

    faces = []
    for j in range(segments):
        faces.append([0, ring(1, j + 1), ring(1, j)])
    for i in range(1, rings - 1):
        for j in range(segments):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces += [[a, b, d], [a, d, c]]
    for j in range(segments):
        faces.append([bottom, ring(rings - 1, j), ring(rings - 1, j + 1)])
    vertices = np.asarray(verts) * r + np.asarray(center, dtype=np.float64)
    return Mesh(vertices, faces, uvs, np.zeros(len(faces), dtype=np.int64),
                anchor_index=0, part_names=(part,), name=name)


def cylinder(radius=1.0, height=1.0, segments: int = 6, center=(0.0, 0.0, 0.0),
             axis: str = "y", part: str = "default", name: str = "cylinder") -> Mesh:
    """Closed prism around ``axis`` with capped ends."""
    verts, uvs = [], []
    for y in (-height / 2, height / 2):
        for j in range(segments):
            t = 2 * np.pi * j / segments
            verts.append([radius * np.cos(t), y, radius * np.sin(t)])
            uvs.append([j / segments, 0.0 if y < 0 else 1.0])
    verts += [[0.0, -height / 2, 0.0], [0.0, height / 2, 0.0]]
    uvs += [[0.5, 0.0], [0.5, 1.0]]
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for j in range(segments):
        k = (j + 1) % segments
        a, b, c, d = j, k, segments + j, segments + k
        faces += [[a, c, d], [a, d, b], [cb, a, b], [ct, d, c]]
    v = np.asarray(verts, dtype=np.float64)
    if axis == "x":
        v = v[:, [1, 0, 2]]
    elif axis == "z":
        v = v[:, [0, 2, 1]]
    if axis in ("x", "z"):
        # swapping two coordinates mirrors the shape; restore outward winding
        faces = [f[::-1] for f in faces]
    v = v + np.asarray(center, dtype=np.float64)
    return Mesh(v, faces, uvs, np.zeros(len(faces), dtype=np.int64),
                anchor_index=int(np.argmax(v[:, 1])), part_names=(part,), name=name)


def combine(meshes, name: str = "mesh") -> Mesh:
    """Merge meshes into one, unifying part names by string."""
    part_names: list[str] = []
    verts, faces, uvs, labels = [], [], [], []
    offset = 0
    for m in meshes:
        remap = []
        for p in m.part_names:
            if p not in part_names:
                part_names.append(p)
            remap.append(part_names.index(p))
        verts.append(m.vertices)
        uvs.append(m.uvs)
        faces.append(m.faces + offset)
        labels.append(np.asarray(remap)[m.part_labels])
        offset += m.n_vertices
    vertices = np.concatenate(verts)
    return Mesh(vertices, np.concatenate(faces), np.concatenate(uvs), np.concatenate(labels),
                anchor_index=int(np.argmax(vertices[:, 1])), part_names=tuple(part_names),
                name=name)
