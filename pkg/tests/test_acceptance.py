"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
happen; they are also repeated in the terminal summary.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from drcount import annotate as an
from drcount import geometry as geo
from drcount.metrics import EvalPair, mae, mse
from drcount.pipeline import generate_dataset, load_manifest, render_image, validate_dataset
from drcount.render import Camera, Framebuffer, draw_mesh, load_rgb, rasterize
from drcount.rng import make_rng
from drcount.samples import sample_mesh_dir
from drcount.scene import GmmSpec, Scene, sample_component_count, sample_gmm

from .oracles import brute_force_render, mean_nearest_neighbor, naive_mae, naive_mse, window_members

RESULTS = []


@contextmanager
def criterion(name, budget=None):
    """Record PASS/FAIL for ``name``; a run over ``budget`` seconds fails."""
    t0 = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget is not None and elapsed > budget:
            raise AssertionError(f"took {elapsed:.2f}s, budget {budget}s")
    except BaseException as exc:
        line = f"FAIL  {name}  ({time.perf_counter() - t0:.2f}s): {exc}".splitlines()[0]
        RESULTS.append(line)
        print("\n" + line)
        raise
    line = f"PASS  {name}  ({elapsed:.2f}s)"
    RESULTS.append(line)
    print("\n" + line)


def test_large_scale_training_numbers_not_reproduced():
    line = ("INFO  counting-network training results are out of scope at desk scale; "
            "the property criteria below stand in for them")
    RESULTS.append(line)
    print("\n" + line)


def test_metric_oracle():
    with criterion("metric oracle: 1e3 random sets at rel 1e-9, hand cases exact", budget=1.0):
        assert mae([EvalPair("a", 3, 4), EvalPair("b", 5, 4)]) == 1.0
        assert mse([EvalPair("a", 3, 4), EvalPair("b", 5, 4)])[0] == 1.0
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            n = int(rng.integers(1, 100))
            truth = rng.integers(0, 3000, n).tolist()
            pred = (rng.uniform(0, 3000, n) if rng.random() < 0.5
                    else rng.integers(0, 3000, n)).tolist()
            pairs = [EvalPair(str(i), p, t) for i, (p, t) in enumerate(zip(pred, truth))]
            ref_mae, ref_mse = naive_mae(pred, truth), naive_mse(pred, truth)
            assert math.isclose(mae(pairs), ref_mae, rel_tol=1e-9, abs_tol=1e-300)
            assert math.isclose(mse(pairs)[0], ref_mse, rel_tol=1e-9, abs_tol=1e-300)


def rounded_bounds(n):
    """Exact reachable range of round-half-up over [1 + n/20, 2 + n/8)."""
    lo = 1 + Fraction(n, 20)
    hi = 2 + Fraction(n, 8)
    smallest = math.floor(lo + Fraction(1, 2))
    top = hi + Fraction(1, 2)
    largest = math.floor(top) - (1 if top.denominator == 1 else 0)
    return max(1, smallest), largest


def test_distribution_bounds_sweep():
    with criterion("distribution sweep: K, T, component count for N=1..200, 1e5 draws each",
                   budget=30.0):
        rng = make_rng(7)
        violations = 0
        for n in range(1, 201):
            k = geo.sample_object_scale(n, rng, size=100_000)
            violations += int(np.count_nonzero((k < 1 / n) | (k > 8 / n)))
            t = geo.sample_thickness(rng, size=100_000)
            violations += int(np.count_nonzero((t < -0.1) | (t > 0.5)))
            c = sample_component_count(n, rng, size=100_000)
            lo, hi = rounded_bounds(n)
            violations += int(np.count_nonzero((c < lo) | (c > hi)))
        assert violations == 0, f"{violations} draws out of bounds"


def test_gmm_single_component():
    with criterion("GMM single component: mean within 0.05, variance within 0.1", budget=5.0):
        mu = np.array([3.0, -7.5, 40.0])
        pts = sample_gmm(GmmSpec([1.0], [mu]), 10_000, make_rng(11))
        assert np.all(np.abs(pts.mean(axis=0) - mu) <= 0.05), pts.mean(axis=0)
        assert np.all(np.abs(pts.var(axis=0, ddof=1) - 1.0) <= 0.1), pts.var(axis=0, ddof=1)


def test_transform_invariants():
    with criterion("transform invariants: scale round trip, randomize bound, solidify 2V/2F",
                   budget=10.0):
        rng = make_rng(5)
        shipped = [geo.load_mesh(p) for p in sorted(sample_mesh_dir().glob("*.obj"))]
        assert shipped
        cube = geo.box()
        for m in shipped + [cube]:
            assert np.array_equal(geo.scale_axis(m, "x", 1.0).vertices, m.vertices)
            for axis in geo.AXES:
                s = float(rng.uniform(0.01, 100))
                back = geo.scale_axis(geo.scale_axis(m, axis, s), axis, 1 / s)
                assert np.allclose(back.vertices, m.vertices, rtol=1e-9, atol=1e-9)

        checked = violations = 0
        while checked < 100_000:
            for m in shipped:
                f = float(rng.uniform(0, 1))
                out = geo.randomize_vertices(m, f, rng)
                bound = f * geo.mean_edge_length(m) * math.sqrt(3)
                disp = np.linalg.norm(out.vertices - m.vertices, axis=1)
                violations += int(np.count_nonzero(disp > bound))
                checked += m.n_vertices
        assert violations == 0, f"{violations} of {checked} vertices moved too far"

        for m in [cube] + shipped:
            out = geo.solidify(m, float(rng.uniform(-0.1, 0.5)))
            assert (out.n_vertices, out.n_faces) == (2 * m.n_vertices, 2 * m.n_faces)
            assert np.array_equal(out.faces[m.n_faces:], m.faces[:, ::-1] + m.n_vertices)


def test_renderer_depth_oracle():
    with criterion("renderer: 500 two-triangle scenes match brute force exactly; "
                   "empty scene is background", budget=30.0):
        w, h, fov, near, far = 32, 24, 70, 0.5, 50
        cam = Camera(width=w, height=h, fov=fov, near=near, far=far)
        rng = np.random.default_rng(99)
        mismatched = 0
        for _ in range(500):
            bg = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            tris, colors = [], []
            for _ in range(2):
                center = rng.uniform([-2, -2, -9], [2, 2, -1.5])
                tris.append(center + rng.normal(scale=1.5, size=(3, 3)))
                colors.append(tuple(int(c) for c in rng.integers(0, 256, 3)))
            fb = Framebuffer.from_background(bg)
            for i, tri in enumerate(tris):
                draw_mesh(fb, cam, tri, [[0, 1, 2]], np.zeros((3, 2)), [0],
                          {0: np.array([[colors[i]]], np.uint8)}, lights=(), ambient=1.0)
            expected = np.array(brute_force_render([t.tolist() for t in tris], colors,
                                                   w, h, fov, near, far, bg), dtype=np.uint8)
            mismatched += int(not np.array_equal(fb.color, expected))
        assert mismatched == 0, f"{mismatched} of 500 scenes differ"

        bg = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        empty = rasterize(Scene([], "bg", "x", [], 0.4, cam, 0), cam, bg, {})
        assert empty.color.tobytes() == bg.tobytes()


def test_annotation_invariants(make_config, tmp_path):
    with criterion("annotations on 100 images: counts, density integral, flip involution, "
                   "1e3 crops", budget=120.0):
        cfg = make_config(size=100, hflip=True, density_maps=True)
        manifest = generate_dataset(cfg, tmp_path, seed=31)
        assert validate_dataset(tmp_path / "manifest.json").ok

        base = []
        for rec in manifest["records"]:
            ann = an.read_annotation(tmp_path / rec["annotation"])
            dots = np.asarray(ann["dots"], dtype=np.float64).reshape(-1, 2)
            assert rec["count"] == ann["count"] == len(dots)
            grid = an.read_density(tmp_path / rec["density"])
            assert abs(float(grid.sum(dtype=np.float64)) - len(dots)) <= 1e-6 * len(dots)
            if rec["augmentation"] == "none":
                img = load_rgb(tmp_path / rec["image"])
                a = an.Annotation(rec["image"], ann["width"], ann["height"], dots,
                                  an.density_map(dots, ann["width"], ann["height"], cfg.sigma))
                base.append((img, a))
        assert len(base) == 100

        for img, a in base:
            img2, a2 = an.hflip(*an.hflip(img, a))
            assert img2.tobytes() == img.tobytes()
            assert a2.dots.tobytes() == a.dots.tobytes()
            assert a2.density.tobytes() == a.density.tobytes()

        rng = make_rng(17)
        for k in range(1000):
            img, a = base[k % len(base)]
            size = int(rng.integers(8, 120))
            x0 = int(rng.integers(0, a.width - size + 1))
            y0 = int(rng.integers(0, a.height - size + 1))
            _, c = an.crop_at(img, a, x0, y0, size, sigma=cfg.sigma)
            expected = window_members(a.dots.tolist(), x0, y0, size)
            assert c.dots.tolist() == expected
            assert abs(c.density.sum() - c.count) <= 1e-6 * max(c.count, 1)


def test_determinism_across_workers(make_config, tmp_path):
    with criterion("determinism: 50 images with 1 and 8 workers are byte identical",
                   budget=120.0):
        cfg = make_config(size=50, hflip=True, crops_per_image=1, crop_size=64)
        m1 = generate_dataset(cfg, tmp_path / "w1", seed=8, workers=1)
        m8 = generate_dataset(cfg, tmp_path / "w8", seed=8, workers=8)
        assert (tmp_path / "w1" / "manifest.json").read_bytes() == \
            (tmp_path / "w8" / "manifest.json").read_bytes()
        assert m1 == m8
        for rec in m1["records"]:
            a = load_rgb(tmp_path / "w1" / rec["image"])
            b = load_rgb(tmp_path / "w8" / rec["image"])
            assert a.tobytes() == b.tobytes(), rec["image"]


def test_ablation_placement_switch(make_config, tmp_path):
    with criterion("ablation: GMM placement clusters dots more tightly than uniform "
                   "(mean nearest-neighbor distance, 20 images)"):
        stats = {}
        for mode in ("gmm", "uniform"):
            cfg = make_config(size=20, n_objects=[30, 30], width=320, height=240, placement=mode)
            out = tmp_path / mode
            manifest = generate_dataset(cfg, out, seed=12)
            assert validate_dataset(out / "manifest.json").ok
            values = []
            for rec in manifest["records"]:
                dots = an.read_annotation(out / rec["annotation"])["dots"]
                d = mean_nearest_neighbor(dots)
                if d is not None:
                    values.append(d)
            stats[mode] = float(np.mean(values))
        print(f"\nmean nearest-neighbor distance: gmm {stats['gmm']:.2f}px, "
              f"uniform {stats['uniform']:.2f}px")
        assert stats["gmm"] < stats["uniform"], stats


@pytest.fixture(scope="module", autouse=True)
def _warm_renderer(make_config, assets):
    # compile the raster kernel once so the first timed criterion does not pay for it
    render_image(make_config(size=1), assets, 0, 0)
