"""Randomized scene composition.

Objects are placed by sampling a Gaussian mixture with identity covariance
whose means are scattered uniformly over the placement box, then each one is
sized, optionally deformed, textured per part and lit by random colored
point lights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .geometry import Mesh
from .render import Camera, Light
from .rng import Rng, derive_seed, make_rng, stage_rng


@dataclass(frozen=True)
class GmmSpec:
    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, 3)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.means, dtype=np.float64).reshape(-1, 3)
        if len(w) < 1 or len(w) != len(m):
            raise ValueError("a mixture needs at least one component and one mean per weight")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)

    @property
    def n_components(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
            raise ValueError("box needs positive extent on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points)
        return np.all((p >= self.lo) & (p <= self.hi), axis=-1)

    def clamp(self, points) -> np.ndarray:
        return np.clip(points, self.lo, self.hi)

    def inflate(self, fraction: float) -> Box:
        pad = (self.hi - self.lo) * fraction
        return Box(self.lo - pad, self.hi + pad)


def sample_component_count(n_objects: int, rng: Rng, size=None):
    """Mixture size drawn from U(1 + N/20, 2 + N/8), rounded half up.

    Returns an int, or an integer array when ``size`` is given.
    """
    if n_objects < 1:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    k = np.maximum(1, np.floor(rng.uniform(1 + n_objects / 20, 2 + n_objects / 8, size=size) + 0.5))
    return int(k) if size is None else k.astype(np.int64)


def component_count_bounds(n_objects: int) -> tuple[int, int]:
    """Smallest and largest count ``sample_component_count`` can return.

    The real draw is half-open, so an upper bound ending in .5 is unreachable.
    """
    lo, hi = 1 + n_objects / 20, 2 + n_objects / 8
    return max(1, int(np.floor(lo + 0.5))), int(np.ceil(hi + 0.5)) - 1


def build_gmm(n_objects: int, region: Box, rng: Rng, weighting: str = "uniform") -> GmmSpec | None:
    k = sample_component_count(n_objects, rng)
    if k == 0:
        return None
    means = rng.uniform(region.lo, region.hi, size=(k, 3))
    if weighting == "dirichlet":
        weights = rng.dirichlet(np.ones(k))
        weights = weights / weights.sum()
    else:
        weights = np.full(k, 1.0 / k)
    return GmmSpec(weights, means)


def sample_gmm(spec: GmmSpec, n: int, rng: Rng, region: Box | None = None) -> np.ndarray:
    """Draw ``n`` points: pick a component by weight, add N(0, I) to its mean."""
    comp = rng.choice(spec.n_components, size=n, p=spec.weights)
    pts = spec.means[comp] + rng.standard_normal((n, 3))
    return region.clamp(pts) if region is not None else pts


def sample_placements(n_objects: int, region: Box, rng: Rng, mode: str = "gmm",
                      weighting: str = "uniform") -> np.ndarray:
    """Object positions inside ``region``; ``mode="uniform"`` is the
    ablation baseline without clustering."""
    if n_objects <= 0:
        return np.zeros((0, 3))
    if mode == "uniform":
        return rng.uniform(region.lo, region.hi, size=(n_objects, 3))
    if mode != "gmm":
        raise ValueError(f"unknown placement mode {mode!r}")
    spec = build_gmm(n_objects, region, rng, weighting)
    return sample_gmm(spec, n_objects, rng, region)


def assign_textures(parts, texture_ids, rng: Rng) -> dict:
    ids = list(texture_ids)
    if not ids:
        raise ValueError("texture library is empty")
    return {p: ids[int(rng.integers(len(ids)))] for p in parts}


def select_background(library, excluded, rng: Rng) -> str:
    """Uniform draw over images whose category is not excluded.

    ``library`` is an iterable of ``(id, category)`` pairs.
    """
    excluded = set(excluded)
    pool = [i for i, cat in library if cat not in excluded]
    if not pool:
        raise ValueError("every background category is excluded")
    return pool[int(rng.integers(len(pool)))]


def place_lights(light_cfg, region: Box, rng: Rng) -> tuple[list, float]:
    """Random colored point lights plus an ambient level.

    Lights are placed uniformly in ``region`` grown by ``light_cfg.inflate``.
    """
    lo, hi = light_cfg.count
    if lo < 1 or lo > hi:
        raise ValueError(f"invalid light count range {light_cfg.count}")
    n = int(rng.integers(lo, hi + 1))
    box = region.inflate(light_cfg.inflate)
    lights = []
    for _ in range(n):
        pos = rng.uniform(box.lo, box.hi)
        color = rng.uniform(light_cfg.color_min, light_cfg.color_max)
        intensity = rng.uniform(*light_cfg.intensity)
        lights.append(Light(tuple(float(x) for x in pos), tuple(float(x) for x in color),
                            float(intensity)))
    ambient = float(rng.uniform(*light_cfg.ambient))
    return lights, ambient


def placement_region(camera: Camera, depth_band) -> Box:
    """Camera-frame box (x right, y up, depth) that stays inside the view
    frustum: its cross-section is the frame footprint at the near end of the
    depth band."""
    d0, d1 = depth_band
    hh = d0 * camera.tan_half_fov
    hw = hh * camera.aspect
    return Box((-hw, -hh, d0), (hw, hh, d1))


def world_box(camera: Camera, region: Box) -> Box:
    corners = np.array([[x, y, z] for x in (region.lo[0], region.hi[0])
                        for y in (region.lo[1], region.hi[1])
                        for z in (region.lo[2], region.hi[2])])
    w = camera.from_camera(corners)
    return Box(w.min(axis=0), w.max(axis=0))


@dataclass(frozen=True)
class TransformRecord:
    """Everything needed to rebuild one instance's geometry."""
    kind: str  # none | scale | randomize | extrude
    object_scale: float  # K
    yaw: float
    axis: str | None = None
    axis_factor: float | None = None
    randomize_factor: float | None = None
    randomize_seed: int | None = None
    thickness: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class SceneInstance:
    asset_id: str
    transform: TransformRecord
    position: tuple  # world space
    textures: dict  # part name -> texture id
    mesh: Mesh = field(repr=False, default=None)  # realized world-space geometry

    def to_dict(self) -> dict:
        return {"asset": self.asset_id, "transform": self.transform.to_dict(),
                "position": [float(x) for x in self.position], "textures": dict(self.textures)}


@dataclass
class Scene:
    instances: list
    background_id: str
    background_category: str
    lights: list
    ambient: float
    camera: Camera
    n_requested: int
    region: Box = field(repr=False, default=None)  # camera frame

    def anchors(self) -> np.ndarray:
        if not self.instances:
            return np.zeros((0, 3))
        return np.array([inst.mesh.anchor_point() for inst in self.instances])


def normalize_height(mesh: Mesh) -> Mesh:
    """Center on the bounding-box center and scale to unit height."""
    lo, hi = mesh.bounds()
    h = hi[1] - lo[1]
    if h <= 0:
        h = float(np.max(hi - lo))
    return geo.scale_uniform(geo.translate(mesh, -(lo + hi) / 2), 1.0 / h)


def realize_instance(base: Mesh, record: TransformRecord, position, size_reference: float) -> Mesh:
    """Apply a transform record to a library mesh and place it in the world.

    Deformations act on the unit-height mesh, so thickness and jitter are
    relative to the object's own size.
    """
    m = normalize_height(base)
    if record.kind == "scale":
        m = geo.scale_axis(m, record.axis, record.axis_factor)
    elif record.kind == "randomize":
        m = geo.randomize_vertices(m, record.randomize_factor, make_rng(record.randomize_seed))
    elif record.kind == "extrude":
        m = geo.solidify(m, record.thickness)
    m = geo.scale_uniform(m, record.object_scale * size_reference)
    m = geo.rotate_y(m, record.yaw)
    return geo.translate(m, position)


def sample_transform(kind: str, n_objects: int, config, rng: Rng) -> TransformRecord:
    k = geo.sample_object_scale(n_objects, rng)
    yaw = float(rng.uniform(0, 2 * np.pi))
    if kind == "scale":
        axis = geo.AXES[int(rng.integers(3))]
        factor = float(rng.uniform(*config.axis_scale_range))
        return TransformRecord(kind, k, yaw, axis=axis, axis_factor=factor)
    if kind == "randomize":
        seed = int(rng.integers(0, 2**63))
        return TransformRecord(kind, k, yaw, randomize_factor=float(config.randomize_factor),
                               randomize_seed=seed)
    if kind == "extrude":
        return TransformRecord(kind, k, yaw, thickness=geo.sample_thickness(rng))
    if kind == "none":
        return TransformRecord(kind, k, yaw)
    raise ValueError(f"unknown transform {kind!r}")


def build_scene(config, assets, seed: int, index: int = 0) -> Scene:
    """Compose one scene; a pure function of (config, assets, seed, index).

    Each sampling stage draws from its own stream derived from
    ``(seed, index, stage)``.
    """
    def rng_for(stage):
        return stage_rng(seed, index, stage)

    camera = config.make_camera()
    region = placement_region(camera, config.camera.depth_band)

    lo, hi = config.n_objects
    n = int(rng_for("count").integers(lo, hi + 1))

    cam_pts = sample_placements(n, region, rng_for("placement"), config.placement,
                                config.mixture_weights)
    positions = camera.from_camera(cam_pts) if n else np.zeros((0, 3))

    mesh_ids = assets.mesh_ids
    texture_ids = assets.textures.ids
    r_tf, r_tex = rng_for("transform"), rng_for("texture")
    instances = []
    for pos in positions:
        asset_id = mesh_ids[int(r_tf.integers(len(mesh_ids)))]
        base = assets.mesh(asset_id)
        record = sample_transform(config.transform, n, config, r_tf)
        textures = assign_textures(base.part_names, texture_ids, r_tex)
        mesh = realize_instance(base, record, pos, config.size_reference)
        instances.append(SceneInstance(asset_id, record, tuple(float(x) for x in pos),
                                       textures, mesh))

    library = [(e.id, e.category) for e in assets.backgrounds.entries]
    bg = select_background(library, config.excluded_categories, rng_for("background"))
    lights, ambient = place_lights(config.lights, world_box(camera, region), rng_for("lights"))
    return Scene(instances, bg, assets.backgrounds.category(bg), lights, ambient, camera, n,
                 region)


def image_seed(master_seed: int, index: int) -> int:
    return derive_seed(master_seed, index, "image")
