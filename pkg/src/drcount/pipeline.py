"""End-to-end dataset generation and validation."""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import annotate as ann_mod
from .assets import Assets
from .config import Config, config_from_dict
from .render import load_rgb, rasterize, save_png
from .rng import stage_rng
from .scene import build_scene, image_seed

log = logging.getLogger(__name__)

MANIFEST_VERSION = "drcount-manifest/1"
MANIFEST_NAME = "manifest.json"


def render_image(config: Config, assets: Assets, master_seed: int, index: int):
    """Build, render and annotate image ``index``; returns (rgb, annotation, scene)."""
    seed = image_seed(master_seed, index)
    scene = build_scene(config, assets, seed)
    textures = assets.textures.images({t for inst in scene.instances for t in inst.textures.values()})
    background = assets.backgrounds.image(scene.background_id)
    fb = rasterize(scene, scene.camera, background, textures, shadows=config.shadows)
    annotation = ann_mod.make_dots(scene, scene.camera, image_id=f"{index:06d}")
    if config.density_maps:
        annotation = ann_mod.with_density(annotation, config.sigma)
    return fb.color, annotation, scene


def _scene_summary(scene) -> dict:
    return {
        "n_requested": scene.n_requested,
        "background": scene.background_id,
        "background_category": scene.background_category,
        "ambient": scene.ambient,
        "lights": [{"position": list(l.position), "color": list(l.color), "intensity": l.intensity}
                   for l in scene.lights],
        "instances": [inst.to_dict() for inst in scene.instances],
    }


def _write_sample(out_dir: Path, stem: str, image, annotation, config: Config, scene=None) -> dict:
    image_file = f"images/{stem}.png"
    ann_file = f"annotations/{stem}.json"
    density_file = None
    save_png(image, out_dir / image_file)
    if annotation.density is not None:
        density_file = f"density/{stem}.dm"
        ann_mod.write_density(annotation.density, out_dir / density_file)
    record = annotation.to_dict(image_file, density_file)
    if scene is not None:
        record["scene"] = _scene_summary(scene)
    (out_dir / ann_file).write_text(json.dumps(record, indent=1) + "\n")
    return {"image": image_file, "annotation": ann_file, "density": density_file,
            "count": annotation.count, "flags": list(annotation.flags)}


def generate_one(config: Config, assets: Assets, master_seed: int, index: int, out_dir) -> list[dict]:
    """Generate image ``index`` and its augmentations; returns manifest records."""
    out_dir = Path(out_dir)
    image, annotation, scene = render_image(config, assets, master_seed, index)
    stem = f"{index:06d}"
    common = {
        "index": index,
        "seed": image_seed(master_seed, index),
        "n_requested": scene.n_requested,
        "transform": config.transform,
        "placement": config.placement,
        "background": scene.background_id,
        "background_category": scene.background_category,
    }
    records = [{**_write_sample(out_dir, stem, image, annotation, config, scene),
                **common, "augmentation": "none"}]
    if config.hflip:
        fimg, fann = ann_mod.hflip(image, annotation)
        fann = replace(fann, image_id=f"{stem}_flip")
        records.append({**_write_sample(out_dir, f"{stem}_flip", fimg, fann, config),
                        **common, "augmentation": "hflip"})
    if config.crops_per_image:
        rng = stage_rng(master_seed, index, "crop")
        sigma = config.sigma if config.density_maps else None
        for k in range(config.crops_per_image):
            cimg, cann = ann_mod.crop(image, annotation, config.crop_size, rng, sigma)
            cann = replace(cann, image_id=f"{stem}_crop{k}")
            records.append({**_write_sample(out_dir, f"{stem}_crop{k}", cimg, cann, config),
                            **common, "augmentation": f"crop{k}"})
    return records


# per-process state for pool workers
_WORKER: dict = {}


def _init_worker(snapshot: dict, out_dir: str) -> None:
    config = config_from_dict(snapshot)
    _WORKER.update(config=config, assets=Assets.from_config(config), out_dir=out_dir)


def _work(args) -> list[dict]:
    master_seed, index = args
    return generate_one(_WORKER["config"], _WORKER["assets"], master_seed, index, _WORKER["out_dir"])


def expected_records(config: Config) -> int:
    return config.size * (1 + int(config.hflip) + config.crops_per_image)


def generate_dataset(config: Config, out_dir, seed: int | None = None, workers: int = 1,
                     progress=None) -> dict:
    """Write images, annotations and finally ``manifest.json`` under ``out_dir``.

    Output depends only on (config, seed); ``workers`` changes speed only.
    The manifest is written last via rename, so an interrupted run never
    leaves a manifest pointing at missing files.
    """
    if seed is not None:
        config = replace(config, seed=int(seed))
    master = int(config.seed)
    out_dir = Path(out_dir)
    for sub in ("images", "annotations") + (("density",) if config.density_maps else ()):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    snapshot = config.to_dict()
    assets = Assets.from_config(config)  # fail fast before any work

    jobs = [(master, i) for i in range(config.size)]
    records: list[dict] = []
    if workers <= 1:
        for master_seed, i in jobs:
            records.extend(generate_one(config, assets, master_seed, i, out_dir))
            if progress:
                progress(i + 1, config.size)
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(snapshot, str(out_dir))) as pool:
            for done, recs in enumerate(pool.map(_work, jobs, chunksize=1), 1):
                records.extend(recs)
                if progress:
                    progress(done, config.size)

    manifest = {"version": MANIFEST_VERSION, "seed": master, "config": snapshot, "records": records}
    tmp = out_dir / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    os.replace(tmp, out_dir / MANIFEST_NAME)
    return manifest


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def config_from_manifest(manifest: dict) -> Config:
    return config_from_dict(manifest["config"])


@dataclass
class ValidationReport:
    n_records: int = 0
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def format(self) -> str:
        head = f"{self.n_records} records, {len(self.problems)} problem(s)"
        return "\n".join([head] + [f"  {p}" for p in self.problems])


def validate_dataset(manifest_path, density_tol: float = 1e-6) -> ValidationReport:
    """Check a generated dataset against its manifest."""
    manifest_path = Path(manifest_path)
    report = ValidationReport()
    try:
        manifest = load_manifest(manifest_path)
        config = config_from_manifest(manifest)
        records = manifest["records"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        report.problems.append(f"{manifest_path}: unreadable manifest ({exc})")
        return report
    root = manifest_path.parent
    report.n_records = len(records)
    if manifest.get("version") != MANIFEST_VERSION:
        report.problems.append(f"unknown manifest version {manifest.get('version')!r}")
    if len(records) != expected_records(config):
        report.problems.append(f"expected {expected_records(config)} records, found {len(records)}")
    excluded = set(config.excluded_categories)
    seen = set()

    for k, rec in enumerate(records):
        name = rec.get("image", f"record {k}")
        if name in seen:
            report.problems.append(f"{name}: listed twice")
        seen.add(name)
        if rec.get("background_category") in excluded:
            report.problems.append(f"{name}: excluded background category {rec['background_category']!r}")
        img_path, ann_path = root / rec["image"], root / rec["annotation"]
        if not img_path.is_file():
            report.problems.append(f"{rec['image']}: image file missing")
            continue
        if not ann_path.is_file():
            report.problems.append(f"{rec['annotation']}: annotation file missing")
            continue
        try:
            ann = ann_mod.read_annotation(ann_path)
            img = load_rgb(img_path)
        except (OSError, ValueError) as exc:
            report.problems.append(f"{name}: unreadable ({exc})")
            continue
        dots = np.asarray(ann["dots"], dtype=np.float64).reshape(-1, 2)
        if ann["count"] != len(dots) or rec["count"] != len(dots):
            report.problems.append(
                f"{name}: count mismatch (record {rec['count']}, annotation {ann['count']}, dots {len(dots)})")
        if img.shape[:2] != (ann["height"], ann["width"]):
            report.problems.append(f"{name}: image size {img.shape[1]}x{img.shape[0]} "
                                   f"!= annotation {ann['width']}x{ann['height']}")
        if not ann_mod.in_frame(dots, ann["width"], ann["height"]).all():
            report.problems.append(f"{name}: dot outside the image")
        if rec.get("density"):
            dpath = root / rec["density"]
            if not dpath.is_file():
                report.problems.append(f"{rec['density']}: density file missing")
                continue
            try:
                grid = ann_mod.read_density(dpath)
            except (OSError, ValueError) as exc:
                report.problems.append(f"{name}: {exc}")
                continue
            total = float(grid.sum(dtype=np.float64))
            if abs(total - len(dots)) > density_tol * max(len(dots), 1):
                report.problems.append(f"{name}: density integral {total:.9f} != count {len(dots)}")
            if grid.min() < 0:
                report.problems.append(f"{name}: negative density")
    return report
