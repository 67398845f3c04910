"""Generation config: dataclasses loaded from YAML or JSON.

Unknown keys are rejected so typos fail loudly instead of silently falling
back to defaults. Relative asset paths resolve against the config file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .render import Camera

TRANSFORMS = ("none", "scale", "randomize", "extrude")
PLACEMENTS = ("gmm", "uniform")
WEIGHTINGS = ("uniform", "dirichlet")


class ConfigError(ValueError):
    pass


@dataclass
class CameraConfig:
    fov: float = 50.0
    position: tuple = (0.0, 0.0, 0.0)
    target: tuple = (0.0, 0.0, -1.0)
    up: tuple = (0.0, 1.0, 0.0)
    near: float = 0.5
    far: float = 200.0
    # placement depth band along the view axis
    depth_band: tuple = (20.0, 60.0)


@dataclass
class LightConfig:
    count: tuple = (1, 4)
    color_min: tuple = (0.2, 0.2, 0.2)
    color_max: tuple = (1.0, 1.0, 1.0)
    intensity: tuple = (0.2, 0.8)
    ambient: tuple = (0.15, 0.5)
    # lights are placed in the placement box grown by this fraction per side
    inflate: float = 0.5


@dataclass
class Config:
    size: int = 2000
    n_objects: tuple = (20, 80)
    transform: str = "randomize"
    randomize_factor: float = 0.4
    axis_scale_range: tuple = (0.5, 2.0)
    size_reference: float = 10.0
    placement: str = "gmm"
    mixture_weights: str = "uniform"
    meshes: str = "assets/meshes"
    textures: str = "assets/textures"
    backgrounds: str = "assets/backgrounds"
    excluded_categories: tuple = ()
    width: int = 1024
    height: int = 768
    camera: CameraConfig = field(default_factory=CameraConfig)
    lights: LightConfig = field(default_factory=LightConfig)
    shadows: bool = False
    hflip: bool = False
    crops_per_image: int = 0
    crop_size: int = 512
    density_maps: bool = False
    sigma: float = 4.0
    max_faces: int = 200
    seed: int = 0
    base_dir: str = field(default=".", repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def check(cond, msg):
            if not cond:
                raise ConfigError(msg)

        check(self.size >= 1, "size must be >= 1")
        lo, hi = self.n_objects
        check(1 <= lo <= hi, f"n_objects range must satisfy 1 <= min <= max, got {self.n_objects}")
        check(self.transform in TRANSFORMS, f"transform must be one of {TRANSFORMS}")
        check(self.placement in PLACEMENTS, f"placement must be one of {PLACEMENTS}")
        check(self.mixture_weights in WEIGHTINGS, f"mixture_weights must be one of {WEIGHTINGS}")
        check(self.randomize_factor >= 0, "randomize_factor must be >= 0")
        check(0 < self.axis_scale_range[0] <= self.axis_scale_range[1],
              "axis_scale_range must be positive and ordered")
        check(self.size_reference > 0, "size_reference must be > 0")
        check(self.width >= 1 and self.height >= 1, "image size must be positive")
        check(self.crops_per_image >= 0, "crops_per_image must be >= 0")
        check(self.crop_size >= 1, "crop_size must be >= 1")
        check(self.sigma > 0, "sigma must be > 0")
        c = self.camera
        check(0 < c.near < c.far, "camera needs 0 < near < far")
        check(c.near <= c.depth_band[0] < c.depth_band[1] <= c.far,
              "camera depth_band must lie inside [near, far]")
        lc = self.lights
        check(1 <= lc.count[0] <= lc.count[1], "light count range must satisfy 1 <= min <= max")
        check(all(a <= b for a, b in zip(lc.color_min, lc.color_max)), "light color_min > color_max")
        check(lc.intensity[0] <= lc.intensity[1], "light intensity range reversed")
        check(lc.ambient[0] <= lc.ambient[1], "ambient range reversed")
        try:
            self.make_camera()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def make_camera(self) -> Camera:
        c = self.camera
        return Camera(position=tuple(c.position), target=tuple(c.target), up=tuple(c.up),
                      fov=c.fov, near=c.near, far=c.far, width=self.width, height=self.height)

    def asset_path(self, key: str) -> Path:
        p = Path(getattr(self, key))
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        """JSON-ready snapshot; asset paths are made absolute."""
        d = _plain(dataclasses.asdict(self))
        d.pop("base_dir")
        for key in ("meshes", "textures", "backgrounds"):
            d[key] = str(self.asset_path(key).resolve())
        return d


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping")
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name != "base_dir"}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown config key(s) in {where or 'top level'}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if name == "camera":
            value = _build(CameraConfig, value, "camera")
        elif name == "lights":
            value = _build(LightConfig, value, "lights")
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_dict(data: dict, base_dir=".") -> Config:
    data = dict(data)
    cfg = _build(Config, data, "")
    cfg.base_dir = str(base_dir)
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse config ({exc})") from exc
    return config_from_dict(data or {}, base_dir=path.parent)
